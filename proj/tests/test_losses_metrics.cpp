#include <doctest.h>

#include "dca/losses.hpp"
#include "dca/metrics.hpp"
#include "dca/oracles.hpp"
#include "dca/verify.hpp"

using namespace dca;

TEST_CASE("uniform scores give ln K cross entropy") {
  const int k = 5;
  Tensor<double> s({1, k, 2, 2});
  Tensor<int32_t> l({1, 2, 2});
  l.v = {0, 1, 2, 3};
  auto loss = class_balanced_ce(make_var(s), l, std::vector<double>(k, 1.0));
  CHECK(loss->value.v[0] == doctest::Approx(std::log(5.0)));
}

TEST_CASE("ignored pixels do not contribute to loss or gradient") {
  std::mt19937 rng(41);
  auto scores = random_tensor<double>({1, 3, 2, 2}, rng);
  Tensor<int32_t> l({1, 2, 2});
  l.v = {0, 255, 2, 255};
  std::vector<double> w(3, 1.0);

  // perturbing scores at ignored pixels must not change the loss
  auto base = class_balanced_ce(make_var(scores), l, w);
  Tensor<double> perturbed = scores;
  perturbed.at(0, 0, 0, 1) += 5.0;
  perturbed.at(0, 2, 1, 1) -= 3.0;
  auto same = class_balanced_ce(make_var(perturbed), l, w);
  CHECK(base->value.v[0] == doctest::Approx(same->value.v[0]).epsilon(1e-12));

  auto x = make_var(scores, true);
  backward(class_balanced_ce(x, l, w));
  // pixel (0,1) and (1,1) are ignored: zero gradient there
  for (int c = 0; c < 3; ++c) {
    CHECK(x->grad.at(0, c, 0, 1) == 0.0);
    CHECK(x->grad.at(0, c, 1, 1) == 0.0);
  }
}

TEST_CASE("all-ignored batch yields zero loss and sets the flag") {
  Tensor<double> s({1, 2, 1, 2}, 0.3);
  Tensor<int32_t> l({1, 1, 2}, 255);
  bool all_ignored = false;
  auto loss = class_balanced_ce(make_var(s), l, {1.0, 1.0}, kIgnoreIndex, &all_ignored);
  CHECK(all_ignored);
  CHECK(loss->value.v[0] == 0.0);
}

TEST_CASE("class weights scale per-pixel terms") {
  Tensor<double> s({1, 2, 1, 1});
  Tensor<int32_t> l({1, 1, 1});
  l.v = {1};
  auto base = class_balanced_ce(make_var(s), l, {1.0, 1.0});
  auto weighted = class_balanced_ce(make_var(s), l, {1.0, 2.5});
  CHECK(weighted->value.v[0] == doctest::Approx(2.5 * base->value.v[0]));
}

TEST_CASE("cross-entropy gradient check") {
  std::mt19937 rng(42);
  auto x = make_var(random_tensor<double>({1, 4, 3, 3}, rng), true);
  Tensor<int32_t> l({1, 3, 3});
  l.v = {0, 1, 2, 3, 255, 0, 1, 2, 3};
  std::vector<double> w = {0.5, 1.0, 2.0, 1.5};
  backward(class_balanced_ce(x, l, w));
  std::vector<GradCoord<double>> coords;
  for (std::size_t i = 0; i < x->value.size(); i += 2)
    coords.push_back({"s[" + std::to_string(i) + "]", &x->value.v[i], x->grad.v[i]});
  auto rep = grad_check<double>([&]() { return class_balanced_ce(x, l, w)->value.v[0]; }, coords);
  CHECK_MESSAGE(rep.pass, rep.worst_coord, " rel err ", rep.max_rel_error);
}

TEST_CASE("bce_with_logits: value, saturation, and gradient") {
  Tensor<double> logits({1, 2});
  logits.v = {0.0, 0.0};
  Tensor<double> targets({1, 2});
  targets.v = {1.0, 0.0};
  auto loss = bce_with_logits(make_var(logits), targets);
  CHECK(loss->value.v[0] == doctest::Approx(2 * std::log(2.0)));

  Tensor<double> sat({1, 2});
  sat.v = {30.0, -30.0};
  auto sat_loss = bce_with_logits(make_var(sat), targets);
  CHECK(sat_loss->value.v[0] <= 1e-8);

  std::mt19937 rng(43);
  auto x = make_var(random_tensor<double>({2, 3}, rng), true);
  Tensor<double> t({2, 3});
  t.v = {1, 0, 1, 0, 0, 1};
  backward(bce_with_logits(x, t));
  std::vector<GradCoord<double>> coords;
  for (std::size_t i = 0; i < x->value.size(); ++i)
    coords.push_back({"x[" + std::to_string(i) + "]", &x->value.v[i], x->grad.v[i]});
  auto rep = grad_check<double>([&]() { return bce_with_logits(x, t)->value.v[0]; }, coords);
  CHECK_MESSAGE(rep.pass, rep.worst_coord, " rel err ", rep.max_rel_error);
}

TEST_CASE("total loss combines components with the default weights") {
  LossWeights w;
  CHECK(w.lambda_m == 1.0);
  CHECK(w.lambda_a == 0.2);
  CHECK(w.lambda_s == 0.05);
  auto c = [](double v) {
    Tensor<double> t({1});
    t.v[0] = v;
    return make_var(t);
  };
  auto total = total_loss(c(2.0), c(1.0), {c(4.0)}, w);
  CHECK(total->value.v[0] == doctest::Approx(2.4));
  CHECK_THROWS(total_loss(c(-1.0), c(1.0), {}, w));
}

TEST_CASE("confusion matrix and mIoU on a worked 2-class example") {
  ConfusionMatrix cm(2);
  cm.count(0, 0) = 3;
  cm.count(0, 1) = 1;
  cm.count(1, 0) = 2;
  cm.count(1, 1) = 4;
  auto iou = mean_iou(cm);
  REQUIRE(iou.defined);
  CHECK(iou.per_class[0] == doctest::Approx(3.0 / 6.0));
  CHECK(iou.per_class[1] == doctest::Approx(4.0 / 7.0));
  CHECK(iou.mean_iou == doctest::Approx(0.5 * (0.5 + 4.0 / 7.0)));
  auto acc = pixel_accuracy(cm);
  REQUIRE(acc.defined);
  CHECK(acc.accuracy == doctest::Approx(0.7));
}

TEST_CASE("classes with empty union are excluded from the mean") {
  ConfusionMatrix cm(3);
  cm.count(0, 0) = 5;
  cm.count(1, 1) = 5;
  auto iou = mean_iou(cm);
  REQUIRE(iou.defined);
  CHECK(iou.mean_iou == doctest::Approx(1.0));
  CHECK(std::isnan(iou.per_class[2]));
}

TEST_CASE("accumulate honors the ignore index and merge is additive") {
  Tensor<int32_t> pred({2, 2});
  pred.v = {0, 1, 1, 0};
  Tensor<int32_t> gt({2, 2});
  gt.v = {0, 1, 255, 1};
  ConfusionMatrix a(2), b(2);
  a.accumulate(pred, gt);
  CHECK(a.total() == 3);
  b.accumulate(pred, gt);
  b.merge(a);
  CHECK(b.total() == 6);
  CHECK(b.count(1, 0) == 2);

  Tensor<int32_t> bad({1, 1});
  bad.v = {7};
  CHECK_THROWS(a.accumulate(bad, bad));
}
