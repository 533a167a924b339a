#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "dca/augment.hpp"
#include "dca/network.hpp"

namespace dca {

struct TrainConfig {
  double base_lr = 0.005;
  double power = 0.9;
  int max_iter = 1000;
  int batch_size = 2;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int seed = 1;
  int log_every = 10;
  int checkpoint_every = 500;
  bool class_balanced = true;
  AugmentConfig aug;
  LossWeights loss_weights;

  void validate() const;
};

struct DataConfig {
  std::string path;        // directory-layout dataset; empty means synthetic
  SynthSpec synthetic;     // training split
  int val_images = 50;     // validation split size (synthetic only)
};

struct EvalConfig {
  std::vector<double> scales{1.0};
};

struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  EvalConfig eval;
};

// Strict parsing: unknown keys anywhere in the document are rejected.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

// Dotted-path override, e.g. "train.seed=5" or "model.structure=pyramid".
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace dca
