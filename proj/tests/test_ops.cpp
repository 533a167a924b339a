#include <doctest.h>

#include "dca/layers.hpp"
#include "dca/oracles.hpp"
#include "dca/verify.hpp"

using namespace dca;

TEST_CASE("adaptive pooling: 4x4 ramp to 2x2") {
  Tensor<double> t({1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) t.v[i] = i;
  auto y = adaptive_avg_pool(make_var(t), 2);
  CHECK(y->value.at(0, 0, 0, 0) == doctest::Approx(2.5));
  CHECK(y->value.at(0, 0, 0, 1) == doctest::Approx(4.5));
  CHECK(y->value.at(0, 0, 1, 0) == doctest::Approx(10.5));
  CHECK(y->value.at(0, 0, 1, 1) == doctest::Approx(12.5));
}

TEST_CASE("adaptive pooling: r = 1 equals the global mean") {
  std::mt19937 rng(2);
  auto t = random_tensor<double>({2, 3, 5, 7}, rng);
  auto y = adaptive_avg_pool(make_var(t), 1);
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) s += t.at(b, c, i, j);
      CHECK(y->value.at(b, c, 0, 0) == doctest::Approx(s / 35));
    }
}

TEST_CASE("adaptive pooling matches the oracle, including r > extent") {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> dim(1, 9), rr(1, 12);
    auto t = random_tensor<double>({1, 2, dim(rng), dim(rng)}, rng);
    int r = rr(rng);
    auto got = adaptive_avg_pool(make_var(t), r);
    auto ref = oracle_context_pool(t, r);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got->value.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("bilinear resize is identity at matching size") {
  std::mt19937 rng(3);
  auto t = random_tensor<float>({1, 2, 6, 6}, rng);
  auto x = make_var(t);
  auto y = bilinear_resize(x, 6, 6);
  CHECK(y.get() == x.get());
}

TEST_CASE("bilinear upsample of a constant map stays constant") {
  Tensor<double> t({1, 1, 3, 3}, 4.25);
  auto y = bilinear_resize(make_var(t), 11, 7);
  for (double v : y->value.v) CHECK(v == doctest::Approx(4.25));
}

TEST_CASE("conv2d matches brute-force convolution with stride and dilation") {
  std::mt19937 rng(4);
  const int ic = 3, oc = 2, h = 9, w = 8, k = 3, stride = 2, pad = 2, dil = 2;
  auto x = random_tensor<double>({1, ic, h, w}, rng);
  auto wt = random_tensor<double>({oc, ic, k, k}, rng);
  auto bt = random_tensor<double>({oc}, rng);
  auto y = conv2d(make_var(x), make_var(wt), make_var(bt), stride, pad, dil);
  const int oh = conv_out_dim(h, k, stride, pad, dil), ow = conv_out_dim(w, k, stride, pad, dil);
  REQUIRE(y->value.dim(2) == oh);
  REQUIRE(y->value.dim(3) == ow);
  for (int o = 0; o < oc; ++o)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double s = bt.v[o];
        for (int c = 0; c < ic; ++c)
          for (int ki = 0; ki < k; ++ki)
            for (int kj = 0; kj < k; ++kj) {
              int ii = i * stride - pad + ki * dil;
              int jj = j * stride - pad + kj * dil;
              if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
              s += x.at(0, c, ii, jj) * wt.at(o, c, ki, kj);
            }
        CHECK(y->value.at(0, o, i, j) == doctest::Approx(s).epsilon(1e-10));
      }
}

TEST_CASE("conv2d gradient check (stride 2, dilation 2)") {
  std::mt19937 rng(6);
  auto x = make_var(random_tensor<double>({1, 2, 7, 7}, rng), true);
  auto wt = make_var(random_tensor<double>({3, 2, 3, 3}, rng), true);
  auto bt = make_var(random_tensor<double>({3}, rng), true);
  auto f = [&]() { return sum_all(mul(conv2d(x, wt, bt, 2, 1, 2), conv2d(x, wt, bt, 2, 1, 2))); };
  auto loss = f();
  backward(loss);
  std::vector<GradCoord<double>> coords;
  auto push = [&](const char* n, Var<double>& v) {
    for (std::size_t i = 0; i < v->value.size(); i += 3)
      coords.push_back({std::string(n) + "[" + std::to_string(i) + "]", &v->value.v[i], v->grad.v[i]});
  };
  push("x", x);
  push("w", wt);
  push("b", bt);
  auto rep = grad_check<double>([&]() { return f()->value.v[0]; }, coords);
  CHECK_MESSAGE(rep.pass, rep.worst_coord, " rel err ", rep.max_rel_error);
}

TEST_CASE("batchnorm train-mode gradient check") {
  std::mt19937 rng(7);
  BatchNorm2d<double> bn(3);
  auto x = make_var(random_tensor<double>({2, 3, 4, 4}, rng), true);
  auto f = [&]() {
    BatchNorm2d<double> local = bn;  // fresh running stats per probe
    auto y = local.forward(x, true);
    return sum_all(mul(y, sigmoid(y)));
  };
  auto loss = f();
  // analytic grads against the persistent graph
  x->grad = Tensor<double>();
  bn.gamma->grad = Tensor<double>();
  bn.beta->grad = Tensor<double>();
  auto y = bn.forward(x, true);
  backward(sum_all(mul(y, sigmoid(y))));
  std::vector<GradCoord<double>> coords;
  for (std::size_t i = 0; i < x->value.size(); i += 5)
    coords.push_back({"x[" + std::to_string(i) + "]", &x->value.v[i], x->grad.v[i]});
  for (std::size_t i = 0; i < 3; ++i) {
    coords.push_back({"gamma[" + std::to_string(i) + "]", &bn.gamma->value.v[i], bn.gamma->grad.v[i]});
    coords.push_back({"beta[" + std::to_string(i) + "]", &bn.beta->value.v[i], bn.beta->grad.v[i]});
  }
  auto rep = grad_check<double>([&]() { return f()->value.v[0]; }, coords);
  CHECK_MESSAGE(rep.pass, rep.worst_coord, " rel err ", rep.max_rel_error);
  (void)loss;
}

TEST_CASE("concat_channels stacks in argument order") {
  Tensor<double> a({1, 1, 2, 2}, 1.0), b({1, 2, 2, 2}, 2.0);
  auto y = concat_channels<double>({make_var(a), make_var(b)});
  CHECK(y->value.dim(1) == 3);
  CHECK(y->value.at(0, 0, 0, 0) == 1.0);
  CHECK(y->value.at(0, 1, 1, 1) == 2.0);
  CHECK(y->value.at(0, 2, 0, 1) == 2.0);
}

TEST_CASE("crop_spatial keeps the top-left window and routes gradients") {
  std::mt19937 rng(8);
  auto x = make_var(random_tensor<double>({1, 1, 4, 5}, rng), true);
  auto y = crop_spatial(x, 2, 3);
  CHECK(y->value.dim(2) == 2);
  CHECK(y->value.at(0, 0, 1, 2) == x->value.at(0, 0, 1, 2));
  backward(sum_all(y));
  CHECK(x->grad.at(0, 0, 0, 0) == 1.0);
  CHECK(x->grad.at(0, 0, 3, 4) == 0.0);
}

TEST_CASE("global_avg_pool flattens to [n, c]") {
  Tensor<double> t({2, 3, 2, 2});
  for (std::size_t i = 0; i < t.size(); ++i) t.v[i] = static_cast<double>(i);
  auto y = global_avg_pool(make_var(t));
  REQUIRE(y->value.shape == std::vector<int>{2, 3});
  CHECK(y->value.at(0, 0) == doctest::Approx(1.5));
  CHECK(y->value.at(1, 2) == doctest::Approx(21.5));
}
