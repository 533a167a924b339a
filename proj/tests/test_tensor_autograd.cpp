#include <doctest.h>

#include "dca/verify.hpp"

using namespace dca;

TEST_CASE("tensor basics") {
  Tensor<float> t({2, 3, 4, 5});
  CHECK(t.size() == 120);
  t.at(1, 2, 3, 4) = 7.f;
  CHECK(t.v[119] == 7.f);
  CHECK(shape_str(t.shape) == "[2, 3, 4, 5]");
  Tensor<float> m({3, 4});
  m.at(2, 3) = 1.f;
  CHECK(m.v[11] == 1.f);
}

TEST_CASE("autograd accumulates through shared subexpressions") {
  // y = (x*x) + (x*x): dy/dx = 4x
  Tensor<double> tv({1, 1, 1, 2});
  tv.v = {3.0, -2.0};
  auto x = make_var(tv, true);
  auto sq = mul(x, x);
  auto y = sum_all(add(sq, sq));
  backward(y);
  CHECK(x->grad.v[0] == doctest::Approx(12.0));
  CHECK(x->grad.v[1] == doctest::Approx(-8.0));
}

TEST_CASE("backward requires scalar root") {
  auto x = make_var(Tensor<double>({1, 1, 2, 2}), true);
  CHECK_THROWS_AS(backward(relu(x)), std::invalid_argument);
}

TEST_CASE("gradients are exact for composed elementwise ops") {
  std::mt19937 rng(5);
  auto xt = random_tensor<double>({1, 2, 3, 3}, rng);
  auto x = make_var(xt, true);
  auto f = [&]() { return sum_all(mul(sigmoid(x), relu(add(x, x)))); };
  auto loss = f();
  backward(loss);
  std::vector<GradCoord<double>> coords;
  for (std::size_t i = 0; i < xt.size(); ++i)
    coords.push_back({"x[" + std::to_string(i) + "]", &x->value.v[i], x->grad.v[i]});
  auto rep = grad_check<double>([&]() { return f()->value.v[0]; }, coords);
  CHECK(rep.pass);
  CHECK(rep.max_rel_error <= 1e-4);
}
