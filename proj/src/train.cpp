#include "dca/train.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dca/checkpoint.hpp"

namespace dca {

namespace fs = std::filesystem;

double poly_lr(long iteration, const TrainConfig& cfg, bool* warned) {
  if (iteration < 0) throw std::invalid_argument("poly_lr: negative iteration");
  if (warned) *warned = false;
  if (iteration > cfg.max_iter) {
    if (warned) *warned = true;
    return 0.0;
  }
  return cfg.base_lr * std::pow(1.0 - static_cast<double>(iteration) / cfg.max_iter, cfg.power);
}

std::string log_record_jsonl(const LogRecord& r) {
  nlohmann::json j{{"iter", r.iter},          {"lr", r.lr},
                   {"loss_total", r.loss_total}, {"loss_main", r.loss_main},
                   {"loss_aux", r.loss_aux},   {"loss_sem", r.loss_sem}};
  return j.dump();
}

TrainResult train_model(SegModel<float>& model, const Dataset& train_ds, const ExperimentConfig& cfg,
                        const std::string& out_dir) {
  cfg.train.validate();
  if (train_ds.samples.empty()) throw std::invalid_argument("train_model: empty dataset");
  const TrainConfig& tc = cfg.train;
  const int k = model.config().num_classes;

  AugmentConfig aug = tc.aug;
  aug.pad_mean = train_ds.mean_color();
  std::vector<float> class_weights =
      tc.class_balanced ? median_frequency_weights(train_ds) : std::vector<float>(k, 1.f);

  StateDict<float> sd = model.state_dict();
  SgdOptimizer<float> opt(sd, tc.momentum, tc.weight_decay);
  std::mt19937 rng(static_cast<unsigned>(tc.seed));
  std::uniform_int_distribution<std::size_t> pick(0, train_ds.samples.size() - 1);

  std::ofstream log_file;
  std::string cfg_json = experiment_config_json(cfg).dump(2);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream cfg_out(fs::path(out_dir) / "config.json");
    cfg_out << cfg_json << "\n";
    log_file.open(fs::path(out_dir) / "metrics.jsonl");
  }

  TrainResult result;
  std::string last_ckpt;
  const int crop = aug.crop_size;
  for (long it = 0; it < tc.max_iter; ++it) {
    // assemble an augmented batch
    Tensor<float> images({tc.batch_size, 3, crop, crop});
    Tensor<int32_t> labels({tc.batch_size, crop, crop});
    Tensor<float> present({tc.batch_size, k});
    for (int b = 0; b < tc.batch_size; ++b) {
      SegmentationSample s = augment(train_ds.samples[pick(rng)], aug, rng);
      std::copy(s.image.v.begin(), s.image.v.end(), images.data() + static_cast<std::size_t>(b) * 3 * crop * crop);
      std::copy(s.labels.v.begin(), s.labels.v.end(), labels.data() + static_cast<std::size_t>(b) * crop * crop);
      for (int c = 0; c < k; ++c) present.at(b, c) = static_cast<float>(s.present[c]);
    }

    auto input = make_var(std::move(images));
    auto fwd = model.forward(input, true);
    auto l_m = class_balanced_ce(fwd.main_scores, labels, class_weights);
    auto l_a = class_balanced_ce(fwd.aux_scores, labels, class_weights);
    std::vector<Var<float>> l_s;
    for (auto& logits : fwd.sem_logits) l_s.push_back(bce_with_logits(logits, present));
    auto total = total_loss(l_m, l_a, l_s, tc.loss_weights);

    if (!std::isfinite(total->value.v[0])) throw TrainAbortError(it, last_ckpt);

    opt.zero_grad();
    backward(total);
    double lr = poly_lr(it, tc);
    opt.step(lr);

    if (it % tc.log_every == 0 || it == tc.max_iter - 1) {
      double sem = 0;
      for (auto& ls : l_s) sem += ls->value.v[0];
      LogRecord rec{it, lr, total->value.v[0], l_m->value.v[0], l_a->value.v[0], sem};
      result.log.push_back(rec);
      if (log_file) log_file << log_record_jsonl(rec) << "\n";
    }
    if (!out_dir.empty() && tc.checkpoint_every > 0 && (it + 1) % tc.checkpoint_every == 0 && it + 1 < tc.max_iter) {
      last_ckpt = (fs::path(out_dir) / ("ckpt_" + std::to_string(it + 1) + ".bin")).string();
      save_checkpoint(last_ckpt, sd, cfg_json, it + 1);
    }
  }
  result.iterations = tc.max_iter;
  if (!out_dir.empty()) {
    result.final_checkpoint = (fs::path(out_dir) / "ckpt_final.bin").string();
    save_checkpoint(result.final_checkpoint, sd, cfg_json, tc.max_iter);
  }
  return result;
}

}  // namespace dca
