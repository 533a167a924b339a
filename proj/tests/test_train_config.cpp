#include <doctest.h>

#include <nlohmann/json.hpp>

#include "dca/experiment.hpp"

using namespace dca;
using nlohmann::json;

TEST_CASE("poly schedule: worked value, start, end, and clamp") {
  TrainConfig cfg;
  cfg.base_lr = 0.01;
  cfg.power = 0.9;
  cfg.max_iter = 1000;
  CHECK(poly_lr(0, cfg) == doctest::Approx(0.01));
  CHECK(poly_lr(500, cfg) == doctest::Approx(0.01 * std::pow(0.5, 0.9)));
  CHECK(poly_lr(500, cfg) == doctest::Approx(0.0053588673));
  CHECK(poly_lr(1000, cfg) == doctest::Approx(0.0));
  bool warned = false;
  CHECK(poly_lr(1500, cfg, &warned) == 0.0);
  CHECK(warned);
  // monotone non-increasing
  double prev = 1e9;
  for (int i = 0; i <= 1000; i += 50) {
    double lr = poly_lr(i, cfg);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("sgd single step matches the hand-computed update") {
  // p = 1, grad = 0.5, wd = 0.1, momentum = 0.9, lr = 0.2, v0 = 0
  // v1 = 0.5 + 0.1*1 = 0.6; p1 = 1 - 0.2*0.6 = 0.88
  StateDict<double> sd;
  auto p = make_var(Tensor<double>({1}, 1.0), true);
  p->ensure_grad();
  p->grad.v[0] = 0.5;
  sd.add_param("p", p);
  SgdOptimizer<double> opt(sd, 0.9, 0.1);
  opt.step(0.2);
  CHECK(p->value.v[0] == doctest::Approx(0.88));
  // second step with the same gradient: v2 = 0.9*0.6 + (0.5 + 0.1*0.88) = 1.128
  p->grad.v[0] = 0.5;
  opt.step(0.2);
  CHECK(p->value.v[0] == doctest::Approx(0.88 - 0.2 * 1.128));
  opt.zero_grad();
  CHECK(p->grad.v[0] == 0.0);
}

TEST_CASE("short training run decreases the loss and logs records") {
  ExperimentConfig cfg;
  cfg.model.backbone_widths = {4, 6, 8, 8};
  cfg.model.structure = StructureKind::Cascade;
  cfg.model.width = 4;
  cfg.model.schedule = {1, 2};
  cfg.model.num_classes = 3;
  cfg.model.seed = 61;
  cfg.data.synthetic.num_images = 8;
  cfg.data.synthetic.image_size = 24;
  cfg.data.synthetic.num_classes = 3;
  cfg.train.max_iter = 80;
  cfg.train.batch_size = 4;
  cfg.train.base_lr = 0.02;
  cfg.train.log_every = 1;
  cfg.train.aug.crop_size = 24;
  cfg.train.aug.rotate_deg = 0;
  cfg.train.aug.blur = false;

  auto ds = generate_synth_dataset(cfg.data.synthetic);
  SegModel<float> model(cfg.model);
  auto res = train_model(model, ds, cfg, "");
  REQUIRE(res.log.size() == 80);
  double first = 0, last = 0;
  for (int i = 0; i < 5; ++i) {
    first += res.log[i].loss_total;
    last += res.log[75 + i].loss_total;
  }
  CHECK(last < first);
  for (const auto& r : res.log) CHECK(std::isfinite(r.loss_total));
  auto line = log_record_jsonl(res.log[0]);
  auto j = json::parse(line);
  CHECK(j.at("iter") == 0);
  CHECK(j.contains("loss_total"));
}

TEST_CASE("config parsing is strict about unknown keys") {
  json doc = {{"model", {{"structure", "cascade"}, {"width", 8}}},
              {"train", {{"max_iter", 10}}},
              {"data", {{"synthetic", {{"num_images", 4}}}}}};
  auto cfg = parse_experiment_config(doc);
  CHECK(cfg.model.width == 8);
  CHECK(cfg.train.max_iter == 10);
  CHECK(cfg.data.synthetic.num_images == 4);

  json bad = doc;
  bad["model"]["widht"] = 8;
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad), doctest::Contains("widht"), std::invalid_argument);
  json bad2 = doc;
  bad2["trian"] = json::object();
  CHECK_THROWS(parse_experiment_config(bad2));
  json bad3 = doc;
  bad3["model"]["structure"] = "spiral";
  CHECK_THROWS(parse_experiment_config(bad3));
}

TEST_CASE("config round-trips through its JSON echo") {
  ExperimentConfig cfg;
  cfg.model.structure = StructureKind::Pyramid;
  cfg.model.width = 16;
  cfg.model.branch_scales = {1, 3};
  cfg.model.semantic_supervision = true;
  cfg.model.num_classes = 7;
  cfg.train.base_lr = 0.02;
  cfg.train.seed = 99;
  cfg.eval.scales = {0.75, 1.0, 1.25};
  auto j = experiment_config_json(cfg);
  auto back = parse_experiment_config(j);
  CHECK(back.model.structure == StructureKind::Pyramid);
  CHECK(back.model.width == 16);
  CHECK(back.model.branch_scales == std::vector<int>{1, 3});
  CHECK(back.model.semantic_supervision);
  CHECK(back.train.base_lr == doctest::Approx(0.02));
  CHECK(back.train.seed == 99);
  CHECK(back.eval.scales == std::vector<double>{0.75, 1.0, 1.25});
}

TEST_CASE("dotted overrides rewrite nested values with type preserved") {
  json doc = {{"train", {{"max_iter", 10}, {"base_lr", 0.1}}}, {"model", {{"structure", "cascade"}}}};
  apply_override(doc, "train.max_iter=25");
  apply_override(doc, "train.base_lr=0.005");
  apply_override(doc, "model.structure=pyramid");
  auto cfg = parse_experiment_config(doc);
  CHECK(cfg.train.max_iter == 25);
  CHECK(cfg.train.base_lr == doctest::Approx(0.005));
  CHECK(cfg.model.structure == StructureKind::Pyramid);
  CHECK_THROWS(apply_override(doc, "no-equals-sign"));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.base_lr = -1;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.max_iter = 0;
  CHECK_THROWS(cfg.validate());
}
