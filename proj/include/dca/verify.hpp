#pragma once

#include "dca/oracles.hpp"
#include "dca/structures.hpp"

namespace dca {

// Shared verification routines: oracle-conformance sweeps and
// central-difference gradient checks on the DCA building blocks. Gradient
// checks run with normalization in inference statistics mode.

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, std::mt19937& rng, T lo = T(-2), T hi = T(2)) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (T& e : t.v) e = static_cast<T>(u(rng));
  return t;
}

// context_pool vs the brute-force bin-average oracle on randomized instances.
template <typename T>
double conformance_context_pool(int instances, unsigned seed = 123) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dim(1, 12), batch(1, 2), scale(1, 17);
  double max_diff = 0;
  for (int t = 0; t < instances; ++t) {
    Tensor<T> f = random_tensor<T>({batch(rng), dim(rng), dim(rng), dim(rng)}, rng);
    int r = scale(rng);
    Tensor<T> ref = oracle_context_pool(f, r);
    Var<T> got = context_pool(make_var(f), r);
    for (std::size_t i = 0; i < ref.size(); ++i)
      max_diff = std::max(max_diff, std::abs(static_cast<double>(ref.v[i] - got->value.v[i])));
  }
  return max_diff;
}

// update_spatial vs the per-element loop oracle.
template <typename T>
double conformance_update_spatial(int instances, unsigned seed = 321) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dim(1, 8);
  double max_diff = 0;
  for (int t = 0; t < instances; ++t) {
    std::vector<int> shape{1 + t % 2, dim(rng), dim(rng), dim(rng)};
    Tensor<T> fs = random_tensor<T>(shape, rng);
    Tensor<T> mask = random_tensor<T>(shape, rng, T(0), T(1));
    Tensor<T> fs_t = random_tensor<T>(shape, rng);
    Tensor<T> ref = oracle_dca_update(fs, mask, fs_t);
    Var<T> got = update_spatial(make_var(fs), make_var(mask), make_var(fs_t));
    for (std::size_t i = 0; i < ref.size(); ++i)
      max_diff = std::max(max_diff, std::abs(static_cast<double>(ref.v[i] - got->value.v[i])));
  }
  return max_diff;
}

// dca_forward vs a straight-line composition of the five component steps,
// with pooling and the spatial update replaced by their loop oracles.
template <typename T>
double conformance_dca_forward(int instances, unsigned seed = 777) {
  std::mt19937 rng(seed);
  double max_diff = 0;
  for (int t = 0; t < instances; ++t) {
    DcaConfig cfg;
    cfg.in_channels_context = cfg.in_channels_spatial = 8;
    cfg.width = 8;
    cfg.context_scale = 1 + t % 4;
    DcaModule<T> mod(cfg, rng);
    // Nudge every parameter so zero-initialized BN gammas don't silence the
    // spatial branch under test.
    StateDict<T> sd;
    mod.collect("m", sd);
    std::uniform_real_distribution<T> pd(T(-0.5), T(0.5));
    for (auto& [pname, p] : sd.params)
      for (auto& pv : p->value.v) pv += pd(rng);
    Var<T> x = make_var(random_tensor<T>({1, 8, 6, 6}, rng));
    auto fwd = mod.forward(x, x, false);

    Tensor<T> pooled = oracle_context_pool(x->value, cfg.context_scale);
    Var<T> g = mod.context_transform(make_var(pooled), 6, 6, false);
    Tensor<T> mask(g->value.shape);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.v[i] = T(1) / (T(1) + std::exp(-g->value.v[i]));
    Var<T> fs_t = mod.spatial_transform(x, false);
    Tensor<T> fs_hat = oracle_dca_update(x->value, mask, fs_t->value);
    // concat by direct copy: g first, then fs_hat
    Tensor<T> fc_hat({1, 2 * cfg.width, 6, 6});
    std::copy(g->value.v.begin(), g->value.v.end(), fc_hat.v.begin());
    std::copy(fs_hat.v.begin(), fs_hat.v.end(), fc_hat.v.begin() + g->value.size());

    auto acc = [&](const Tensor<T>& a, const Tensor<T>& b) {
      for (std::size_t i = 0; i < a.size(); ++i)
        max_diff = std::max(max_diff, std::abs(static_cast<double>(a.v[i] - b.v[i])));
    };
    acc(fs_hat, fwd.spatial->value);
    acc(fc_hat, fwd.context->value);
    acc(mask, fwd.mask->value);
  }
  return max_diff;
}

namespace detail {

// Scalar probe loss covering every output path of a structure forward.
template <typename T>
Var<T> probe_loss(const Var<T>& features, const std::vector<Var<T>>& masks, const std::vector<Var<T>>& sem) {
  Var<T> s = sum_all(mul(features, features));
  for (const auto& m : masks) s = add(s, sum_all(m));
  for (const auto& l : sem) s = add(s, sum_all(mul(l, l)));
  return s;
}

// Several BN gammas are zero-initialized, which parks downstream ReLUs exactly
// at their kink; perturb every parameter so the finite differences stay valid.
template <typename T>
void randomize_params(StateDict<T>& sd, std::mt19937& rng) {
  std::uniform_real_distribution<T> d(T(-0.5), T(0.5));
  for (auto& [name, p] : sd.params)
    for (auto& x : p->value.v) x += d(rng);
}

template <typename T>
GradCheckReport run_grad_check(StateDict<T>& sd, Var<T>& input, const std::function<Var<T>()>& forward, double epsilon,
                               double tolerance) {
  Var<T> loss = forward();
  backward(loss);
  std::vector<GradCoord<T>> coords;
  for (auto& [name, p] : sd.params)
    for (std::size_t i = 0; i < p->value.size(); ++i)
      coords.push_back({name + "[" + std::to_string(i) + "]", &p->value.v[i], p->grad.empty() ? T(0) : p->grad.v[i]});
  for (std::size_t i = 0; i < input->value.size(); ++i)
    coords.push_back({"input[" + std::to_string(i) + "]", &input->value.v[i], input->grad.v[i]});
  return grad_check<T>([&]() { return forward()->value.v[0]; }, coords, epsilon, tolerance);
}

}  // namespace detail

// Standalone DCA module at 1 x 4 x 6 x 6, r = 2, double precision.
inline GradCheckReport grad_check_dca_module(double epsilon = 1e-5, double tolerance = 1e-4, unsigned seed = 11) {
  std::mt19937 rng(seed);
  DcaConfig cfg;
  cfg.in_channels_context = cfg.in_channels_spatial = 4;
  cfg.width = 4;
  cfg.context_scale = 2;
  cfg.semantic_supervision = true;
  cfg.num_classes = 3;
  cfg.sem_head_width = 4;
  DcaModule<double> mod(cfg, rng);
  Var<double> x = make_var(random_tensor<double>({1, 4, 6, 6}, rng), true);
  StateDict<double> sd;
  mod.collect("dca", sd);
  detail::randomize_params(sd, rng);
  auto forward = [&]() {
    auto out = mod.forward(x, x, false);
    std::vector<Var<double>> sem;
    if (out.sem_logits) sem.push_back(*out.sem_logits);
    return detail::probe_loss(out.context, {out.mask, out.spatial}, sem);
  };
  return detail::run_grad_check<double>(sd, x, forward, epsilon, tolerance);
}

// Two-module toy cascade at 1 x 8 x 6 x 6, double precision.
inline GradCheckReport grad_check_cascade(double epsilon = 1e-5, double tolerance = 1e-4, unsigned seed = 13) {
  std::mt19937 rng(seed);
  CascadeDca<double> cas(8, 4, {{1, 2}}, FinalTap::Context, true, 3, 4, rng);
  Var<double> x = make_var(random_tensor<double>({1, 8, 6, 6}, rng), true);
  StateDict<double> sd;
  cas.collect("cascade", sd);
  detail::randomize_params(sd, rng);
  auto forward = [&]() {
    auto out = cas.forward(x, false);
    return detail::probe_loss(out.features, out.masks, out.sem_logits);
  };
  return detail::run_grad_check<double>(sd, x, forward, epsilon, tolerance);
}

}  // namespace dca
