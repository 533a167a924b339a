#include <doctest.h>

#include "dca/verify.hpp"

using namespace dca;

namespace {
DcaConfig toy_cfg(int in_c, int in_s, int width, int r, bool ss = false, int k = 0) {
  DcaConfig cfg;
  cfg.in_channels_context = in_c;
  cfg.in_channels_spatial = in_s;
  cfg.width = width;
  cfg.context_scale = r;
  cfg.semantic_supervision = ss;
  cfg.num_classes = k;
  cfg.sem_head_width = 8;
  return cfg;
}
}  // namespace

TEST_CASE("compute_mask is the elementwise sigmoid") {
  Tensor<double> g({1, 1, 1, 3});
  g.v = {std::log(3.0), 0.0, -std::log(3.0)};
  auto m = compute_mask(make_var(g));
  CHECK(m->value.v[0] == doctest::Approx(0.75));
  CHECK(m->value.v[1] == doctest::Approx(0.5));
  CHECK(m->value.v[2] == doctest::Approx(0.25));
}

TEST_CASE("module output shapes: context 2w, spatial w, mask w") {
  std::mt19937 rng(21);
  DcaModule<float> mod(toy_cfg(6, 6, 4, 3), rng);
  auto x = make_var(random_tensor<float>({2, 6, 7, 5}, rng));
  auto out = mod.forward(x, x, false);
  CHECK(out.context->value.shape == std::vector<int>{2, 8, 7, 5});
  CHECK(out.spatial->value.shape == std::vector<int>{2, 4, 7, 5});
  CHECK(out.mask->value.shape == std::vector<int>{2, 4, 7, 5});
  CHECK_FALSE(out.sem_logits.has_value());
}

TEST_CASE("mask entries lie strictly inside (0, 1)") {
  std::mt19937 rng(22);
  DcaModule<float> mod(toy_cfg(5, 5, 4, 2), rng);
  auto x = make_var(random_tensor<float>({1, 5, 8, 8}, rng));
  auto out = mod.forward(x, x, true);
  for (float v : out.mask->value.v) {
    CHECK(v > 0.f);
    CHECK(v < 1.f);
  }
}

TEST_CASE("zeroed mask reduces the spatial update to the residual, bit-exact") {
  std::mt19937 rng(23);
  SUBCASE("matching widths: residual is the spatial input") {
    DcaModule<float> mod(toy_cfg(4, 4, 4, 2), rng);
    auto x = make_var(random_tensor<float>({1, 4, 6, 6}, rng));
    mod.force_zero_mask = true;
    auto out = mod.forward(x, x, false);
    for (std::size_t i = 0; i < x->value.size(); ++i) CHECK(out.spatial->value.v[i] == x->value.v[i]);
  }
  SUBCASE("width change: residual is the first spatial layer's output") {
    DcaModule<float> mod(toy_cfg(6, 6, 4, 2), rng);
    auto x = make_var(random_tensor<float>({1, 6, 6, 6}, rng));
    auto r1 = mod.spatial_layer1(x, false);
    mod.force_zero_mask = true;
    auto out = mod.forward(x, x, false);
    for (std::size_t i = 0; i < r1->value.size(); ++i) CHECK(out.spatial->value.v[i] == r1->value.v[i]);
  }
}

TEST_CASE("contextual output concatenates context features first") {
  std::mt19937 rng(24);
  Tensor<double> g({1, 2, 2, 2}, 3.0), fs({1, 3, 2, 2}, -1.0);
  auto y = update_context(make_var(g), make_var(fs));
  CHECK(y->value.dim(1) == 5);
  CHECK(y->value.at(0, 0, 0, 0) == 3.0);
  CHECK(y->value.at(0, 1, 1, 1) == 3.0);
  CHECK(y->value.at(0, 2, 0, 0) == -1.0);
  CHECK(y->value.at(0, 4, 1, 1) == -1.0);
}

TEST_CASE("semantic head emits one logit vector per image") {
  std::mt19937 rng(25);
  DcaModule<float> mod(toy_cfg(4, 4, 4, 1, true, 5), rng);
  auto x = make_var(random_tensor<float>({3, 4, 8, 8}, rng));
  auto out = mod.forward(x, x, false);
  REQUIRE(out.sem_logits.has_value());
  CHECK((*out.sem_logits)->value.shape == std::vector<int>{3, 5});
}

TEST_CASE("forward composition matches the straight-line oracle") {
  CHECK(conformance_dca_forward<double>(20) <= 1e-6);
}

TEST_CASE("spatial update matches the oracle over random instances") {
  CHECK(conformance_update_spatial<double>(50) <= 1e-6);
}

TEST_CASE("config validation rejects bad settings") {
  CHECK_THROWS(toy_cfg(4, 4, 4, 0).validate());
  CHECK_THROWS(toy_cfg(4, 4, 0, 2).validate());
  CHECK_THROWS(toy_cfg(0, 4, 4, 2).validate());
  CHECK_THROWS(toy_cfg(4, 4, 4, 2, true, 0).validate());
}

TEST_CASE("pathways must be spatially aligned") {
  std::mt19937 rng(26);
  DcaModule<float> mod(toy_cfg(4, 4, 4, 2), rng);
  auto fc = make_var(random_tensor<float>({1, 4, 6, 6}, rng));
  auto fs = make_var(random_tensor<float>({1, 4, 5, 6}, rng));
  CHECK_THROWS_AS(mod.forward(fc, fs, false), std::invalid_argument);
}

TEST_CASE("standalone module gradient check in double precision") {
  auto rep = grad_check_dca_module();
  CHECK_MESSAGE(rep.pass, rep.worst_coord, " rel err ", rep.max_rel_error);
  CHECK(rep.coords_checked > 100);
}
