#include "dca/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace dca {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(base_lr > 0)) throw std::invalid_argument("train.base_lr must be > 0");
  if (!(power > 0)) throw std::invalid_argument("train.power must be > 0");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("train.momentum must be in [0, 1)");
  if (weight_decay < 0) throw std::invalid_argument("train.weight_decay must be >= 0");
  if (max_iter < 1) throw std::invalid_argument("train.max_iter must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (loss_weights.lambda_m < 0 || loss_weights.lambda_a < 0 || loss_weights.lambda_s < 0)
    throw std::invalid_argument("train.loss_weights must be nonnegative");
  aug.validate();
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
}

StructureKind parse_structure(const std::string& s) {
  if (s == "none") return StructureKind::None;
  if (s == "cascade") return StructureKind::Cascade;
  if (s == "pyramid") return StructureKind::Pyramid;
  if (s == "crs") return StructureKind::Crs;
  throw std::invalid_argument("config: model.structure must be none|cascade|pyramid|crs, got '" + s + "'");
}

FinalTap parse_tap(const std::string& s) {
  if (s == "context") return FinalTap::Context;
  if (s == "spatial") return FinalTap::Spatial;
  throw std::invalid_argument("config: model.final_tap must be context|spatial, got '" + s + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  reject_unknown(j, {"model", "train", "data", "eval"}, "");

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m,
                   {"backbone_widths", "structure", "width", "schedule", "branch_scales", "modules_per_branch",
                    "final_tap", "num_classes", "semantic_supervision", "sem_head_width", "aux_width", "seed"},
                   "model.");
    get_if(m, "backbone_widths", cfg.model.backbone_widths);
    if (m.contains("structure")) cfg.model.structure = parse_structure(m.at("structure").get<std::string>());
    get_if(m, "width", cfg.model.width);
    get_if(m, "schedule", cfg.model.schedule);
    get_if(m, "branch_scales", cfg.model.branch_scales);
    get_if(m, "modules_per_branch", cfg.model.modules_per_branch);
    if (m.contains("final_tap")) cfg.model.final_tap = parse_tap(m.at("final_tap").get<std::string>());
    get_if(m, "num_classes", cfg.model.num_classes);
    get_if(m, "semantic_supervision", cfg.model.semantic_supervision);
    get_if(m, "sem_head_width", cfg.model.sem_head_width);
    get_if(m, "aux_width", cfg.model.aux_width);
    get_if(m, "seed", cfg.model.seed);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t,
                   {"base_lr", "power", "max_iter", "batch_size", "momentum", "weight_decay", "seed", "log_every",
                    "checkpoint_every", "class_balanced", "augment", "loss_weights"},
                   "train.");
    get_if(t, "base_lr", cfg.train.base_lr);
    get_if(t, "power", cfg.train.power);
    get_if(t, "max_iter", cfg.train.max_iter);
    get_if(t, "batch_size", cfg.train.batch_size);
    get_if(t, "momentum", cfg.train.momentum);
    get_if(t, "weight_decay", cfg.train.weight_decay);
    get_if(t, "seed", cfg.train.seed);
    get_if(t, "log_every", cfg.train.log_every);
    get_if(t, "checkpoint_every", cfg.train.checkpoint_every);
    get_if(t, "class_balanced", cfg.train.class_balanced);
    if (t.contains("augment")) {
      const json& a = t.at("augment");
      reject_unknown(a, {"mirror", "scale_min", "scale_max", "rotate_deg", "blur", "crop_size"}, "train.augment.");
      get_if(a, "mirror", cfg.train.aug.mirror);
      get_if(a, "scale_min", cfg.train.aug.scale_min);
      get_if(a, "scale_max", cfg.train.aug.scale_max);
      get_if(a, "rotate_deg", cfg.train.aug.rotate_deg);
      get_if(a, "blur", cfg.train.aug.blur);
      get_if(a, "crop_size", cfg.train.aug.crop_size);
    }
    if (t.contains("loss_weights")) {
      const json& lw = t.at("loss_weights");
      reject_unknown(lw, {"lambda_m", "lambda_a", "lambda_s"}, "train.loss_weights.");
      get_if(lw, "lambda_m", cfg.train.loss_weights.lambda_m);
      get_if(lw, "lambda_a", cfg.train.loss_weights.lambda_a);
      get_if(lw, "lambda_s", cfg.train.loss_weights.lambda_s);
    }
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown(d, {"path", "synthetic", "val_images"}, "data.");
    get_if(d, "path", cfg.data.path);
    get_if(d, "val_images", cfg.data.val_images);
    if (d.contains("synthetic")) {
      const json& s = d.at("synthetic");
      reject_unknown(s, {"num_images", "image_size", "num_classes", "min_shapes", "max_shapes", "seed"},
                     "data.synthetic.");
      get_if(s, "num_images", cfg.data.synthetic.num_images);
      get_if(s, "image_size", cfg.data.synthetic.image_size);
      get_if(s, "num_classes", cfg.data.synthetic.num_classes);
      get_if(s, "min_shapes", cfg.data.synthetic.min_shapes);
      get_if(s, "max_shapes", cfg.data.synthetic.max_shapes);
      get_if(s, "seed", cfg.data.synthetic.seed);
    }
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    reject_unknown(e, {"scales"}, "eval.");
    get_if(e, "scales", cfg.eval.scales);
  }

  cfg.train.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

json experiment_config_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = {{"backbone_widths", cfg.model.backbone_widths},
                {"structure", structure_name(cfg.model.structure)},
                {"width", cfg.model.width},
                {"schedule", cfg.model.schedule},
                {"branch_scales", cfg.model.branch_scales},
                {"modules_per_branch", cfg.model.modules_per_branch},
                {"final_tap", cfg.model.final_tap == FinalTap::Context ? "context" : "spatial"},
                {"num_classes", cfg.model.num_classes},
                {"semantic_supervision", cfg.model.semantic_supervision},
                {"sem_head_width", cfg.model.sem_head_width},
                {"aux_width", cfg.model.aux_width},
                {"seed", cfg.model.seed}};
  j["train"] = {{"base_lr", cfg.train.base_lr},
                {"power", cfg.train.power},
                {"max_iter", cfg.train.max_iter},
                {"batch_size", cfg.train.batch_size},
                {"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay},
                {"seed", cfg.train.seed},
                {"log_every", cfg.train.log_every},
                {"checkpoint_every", cfg.train.checkpoint_every},
                {"class_balanced", cfg.train.class_balanced},
                {"augment",
                 {{"mirror", cfg.train.aug.mirror},
                  {"scale_min", cfg.train.aug.scale_min},
                  {"scale_max", cfg.train.aug.scale_max},
                  {"rotate_deg", cfg.train.aug.rotate_deg},
                  {"blur", cfg.train.aug.blur},
                  {"crop_size", cfg.train.aug.crop_size}}},
                {"loss_weights",
                 {{"lambda_m", cfg.train.loss_weights.lambda_m},
                  {"lambda_a", cfg.train.loss_weights.lambda_a},
                  {"lambda_s", cfg.train.loss_weights.lambda_s}}}};
  j["data"] = {{"path", cfg.data.path},
               {"val_images", cfg.data.val_images},
               {"synthetic",
                {{"num_images", cfg.data.synthetic.num_images},
                 {"image_size", cfg.data.synthetic.image_size},
                 {"num_classes", cfg.data.synthetic.num_classes},
                 {"min_shapes", cfg.data.synthetic.min_shapes},
                 {"max_shapes", cfg.data.synthetic.max_shapes},
                 {"seed", cfg.data.synthetic.seed}}}};
  j["eval"] = {{"scales", cfg.eval.scales}};
  return j;
}

void apply_override(json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override must be key.path=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  std::string ptr = "/";
  for (char c : path) ptr += (c == '.') ? '/' : c;
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // bare string
  }
  doc[json::json_pointer(ptr)] = parsed;
}

}  // namespace dca
