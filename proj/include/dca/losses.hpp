#pragma once

#include <cstdint>
#include <optional>

#include "dca/ops.hpp"

namespace dca {

constexpr int kIgnoreIndex = 255;

struct LossWeights {
  double lambda_m = 1.0;
  double lambda_a = 0.2;
  double lambda_s = 0.05;
};

// Class-balanced softmax cross entropy over a dense score map.
// scores: [n, K, h, w], labels: [n, h, w] with values in {0..K-1} or ignore.
// Returns mean over non-ignored pixels of weight[gt] * (-log p[gt]).
// all_ignored, when given, is set when no pixel contributed (loss is 0).
template <typename T>
Var<T> class_balanced_ce(const Var<T>& scores, const Tensor<int32_t>& labels, const std::vector<T>& class_weights,
                         int ignore_index = kIgnoreIndex, bool* all_ignored = nullptr) {
  check_rank4(scores->value, "class_balanced_ce scores");
  const int n = scores->value.dim(0), k = scores->value.dim(1), h = scores->value.dim(2), w = scores->value.dim(3);
  if (labels.rank() != 3 || labels.dim(0) != n || labels.dim(1) != h || labels.dim(2) != w)
    throw std::invalid_argument("class_balanced_ce: label shape mismatch " + shape_str(labels.shape));
  if (static_cast<int>(class_weights.size()) != k)
    throw std::invalid_argument("class_balanced_ce: class_weights length != K");
  for (T cw : class_weights)
    if (cw < T(0)) throw std::invalid_argument("class_balanced_ce: negative class weight");

  auto probs = std::make_shared<Tensor<T>>(std::vector<int>{n, k, h, w});
  double loss_sum = 0;
  std::size_t valid = 0;
  for (int b = 0; b < n; ++b)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        // softmax over channels, always computed (needed for backward of valid pixels only)
        T mx = scores->value.at(b, 0, i, j);
        for (int cl = 1; cl < k; ++cl) mx = std::max(mx, scores->value.at(b, cl, i, j));
        double z = 0;
        for (int cl = 0; cl < k; ++cl) z += std::exp(static_cast<double>(scores->value.at(b, cl, i, j) - mx));
        for (int cl = 0; cl < k; ++cl)
          probs->at(b, cl, i, j) = static_cast<T>(std::exp(static_cast<double>(scores->value.at(b, cl, i, j) - mx)) / z);
        int gt = labels.v[(static_cast<std::size_t>(b) * h + i) * w + j];
        if (gt == ignore_index) continue;
        if (gt < 0 || gt >= k)
          throw std::invalid_argument("class_balanced_ce: label " + std::to_string(gt) + " out of range for K=" + std::to_string(k));
        loss_sum += class_weights[gt] * -std::log(std::max(static_cast<double>(probs->at(b, gt, i, j)), 1e-300));
        ++valid;
      }
  if (all_ignored) *all_ignored = (valid == 0);
  Tensor<T> y({1});
  y.v[0] = valid ? static_cast<T>(loss_sum / valid) : T(0);
  auto out = make_op(std::move(y), {scores});
  if (out->requires_grad && valid > 0)
    out->backprop = [o = out.get(), ps = scores.get(), probs, labels, class_weights, ignore_index, n, k, h, w, valid]() {
      auto& g = ps->ensure_grad();
      T go = o->grad.v[0] / static_cast<T>(valid);
      for (int b = 0; b < n; ++b)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            int gt = labels.v[(static_cast<std::size_t>(b) * h + i) * w + j];
            if (gt == ignore_index) continue;
            T cw = class_weights[gt];
            for (int cl = 0; cl < k; ++cl) {
              T p = probs->at(b, cl, i, j);
              g.at(b, cl, i, j) += go * cw * (p - (cl == gt ? T(1) : T(0)));
            }
          }
    };
  return out;
}

// Multi-label binary cross entropy with logits, summed over classes and
// averaged over the batch. logits/targets: [n, K], targets in {0, 1}.
template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, const Tensor<T>& targets) {
  if (logits->value.rank() != 2 || !targets.same_shape(logits->value))
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  const int n = logits->value.dim(0), k = logits->value.dim(1);
  double loss = 0;
  for (std::size_t i = 0; i < logits->value.size(); ++i) {
    double x = logits->value.v[i], t = targets.v[i];
    // stable: max(x,0) - x*t + log(1 + exp(-|x|))
    loss += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  Tensor<T> y({1});
  y.v[0] = static_cast<T>(loss / n);
  auto out = make_op(std::move(y), {logits});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = logits.get(), targets, n]() {
      auto& g = p->ensure_grad();
      T go = o->grad.v[0] / static_cast<T>(n);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double x = p->value.v[i];
        double s = 1.0 / (1.0 + std::exp(-x));
        g.v[i] += go * static_cast<T>(s - targets.v[i]);
      }
    };
  return out;
}

// L = lambda_m*l_m + lambda_a*l_a + lambda_s * sum(l_s_list)
template <typename T>
Var<T> total_loss(const Var<T>& l_m, const Var<T>& l_a, const std::vector<Var<T>>& l_s_list, const LossWeights& w) {
  auto check = [](const Var<T>& l, const char* name) {
    if (l->value.size() != 1) throw std::invalid_argument(std::string(name) + ": loss must be scalar");
    if (l->value.v[0] < T(0)) throw std::invalid_argument(std::string(name) + ": negative component loss");
  };
  check(l_m, "total_loss l_m");
  check(l_a, "total_loss l_a");
  for (const auto& ls : l_s_list) check(ls, "total_loss l_s");
  Var<T> total = scale(l_m, static_cast<T>(w.lambda_m));
  total = add(total, scale(l_a, static_cast<T>(w.lambda_a)));
  for (const auto& ls : l_s_list) total = add(total, scale(ls, static_cast<T>(w.lambda_s)));
  return total;
}

}  // namespace dca
