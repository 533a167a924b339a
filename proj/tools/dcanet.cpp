#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "dca/check.hpp"
#include "dca/checkpoint.hpp"
#include "dca/experiment.hpp"
#include "dca/image_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_scales(const std::string& csv) {
  std::vector<double> scales;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    scales.push_back(std::stod(tok));
  }
  if (scales.empty()) throw std::invalid_argument("--scales: no scales given");
  return scales;
}

std::string digest_hex(std::uint64_t d) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

dca::SegModel<float> model_from_checkpoint(const std::string& path, dca::ExperimentConfig* cfg_out = nullptr) {
  auto cfg = dca::parse_experiment_config(json::parse(dca::checkpoint_config(path)));
  dca::SegModel<float> model(cfg.model);
  auto sd = model.state_dict();
  dca::load_checkpoint(path, sd);
  if (cfg_out) *cfg_out = cfg;
  return model;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, int seed,
              const std::vector<std::string>& overrides) {
  std::ifstream is(config_path);
  if (!is) throw std::runtime_error("cannot read config " + config_path);
  json doc = json::parse(is);
  for (const auto& ov : overrides) dca::apply_override(doc, ov);
  if (seed >= 0) {
    dca::apply_override(doc, "train.seed=" + std::to_string(seed));
    dca::apply_override(doc, "model.seed=" + std::to_string(seed));
  }
  auto cfg = dca::parse_experiment_config(doc);
  cfg.train.validate();

  auto [train_ds, val_ds] = dca::build_datasets(cfg.data);
  std::cout << "dataset: " << train_ds.samples.size() << " train / " << val_ds.samples.size() << " val images, "
            << train_ds.num_classes << " classes\n";
  dca::SegModel<float> model(cfg.model);
  auto result = dca::train_model(model, train_ds, cfg, out_dir);
  std::cout << "trained " << result.iterations << " iterations";
  if (!result.final_checkpoint.empty())
    std::cout << "; final checkpoint " << result.final_checkpoint << " (digest "
              << digest_hex(dca::file_digest(result.final_checkpoint)) << ")";
  std::cout << "\n";

  auto rep = dca::evaluate_model(model, val_ds, cfg.eval.scales);
  std::cout << "val mIoU " << rep.mean_iou << ", pixel acc " << rep.pixel_acc << "\n";
  if (!out_dir.empty()) {
    std::ofstream os(fs::path(out_dir) / "eval_final.json");
    os << dca::eval_report_json(rep, result.final_checkpoint.empty()
                                         ? std::string("none")
                                         : digest_hex(dca::file_digest(result.final_checkpoint)))
              .dump(2)
       << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& out_path, const std::string& scales_csv,
             const std::string& pred_dir) {
  dca::ExperimentConfig cfg;
  auto model = model_from_checkpoint(ckpt_path, &cfg);
  auto [train_ds, val_ds] = dca::build_datasets(cfg.data);
  std::vector<double> scales = scales_csv.empty() ? cfg.eval.scales : parse_scales(scales_csv);

  auto rep = dca::evaluate_model(model, val_ds, scales);
  json j = dca::eval_report_json(rep, digest_hex(dca::file_digest(ckpt_path)));
  j["scales"] = scales;
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << j.dump(2) << "\n";
    std::cout << "eval: mIoU " << rep.mean_iou << ", pixel acc " << rep.pixel_acc << " -> " << out_path << "\n";
  }

  if (!pred_dir.empty()) {
    fs::create_directories(pred_dir);
    const int k = val_ds.num_classes;
    for (std::size_t i = 0; i < val_ds.samples.size(); ++i) {
      auto probs = dca::multi_scale_probs(model, val_ds.samples[i].image, scales);
      auto labels = dca::argmax_labels(probs);
      dca::Tensor<std::uint8_t> gray({labels.dim(0), labels.dim(1)});
      for (std::size_t e = 0; e < gray.size(); ++e)
        gray.v[e] = static_cast<std::uint8_t>(labels.v[e] * 255 / std::max(1, k - 1));
      char name[32];
      std::snprintf(name, sizeof(name), "pred_%04zu.png", i);
      dca::write_gray_png((fs::path(pred_dir) / name).string(), gray);
    }
    std::cout << "wrote " << val_ds.samples.size() << " predictions to " << pred_dir << "\n";
  }
  return 0;
}

int cmd_viz_masks(const std::string& ckpt_path, const std::string& image_path, const std::string& out_dir,
                  bool per_channel) {
  dca::ExperimentConfig cfg;
  auto model = model_from_checkpoint(ckpt_path, &cfg);
  if (model.num_dca_modules() == 0) {
    std::cerr << "viz-masks: structure '" << dca::structure_name(cfg.model.structure)
              << "' has no attention masks\n";
    return 2;
  }

  auto rgb = dca::read_rgb_png(image_path);
  dca::Tensor<float> img({1, 3, rgb.dim(1), rgb.dim(2)});
  for (std::size_t e = 0; e < rgb.size(); ++e) img.v[e] = static_cast<float>(rgb.v[e]) / 255.0f;
  auto x = dca::make_var(std::move(img), false);
  auto out = model.forward(x, /*training=*/false);

  fs::create_directories(out_dir);
  const std::string sname = dca::structure_name(cfg.model.structure);
  for (std::size_t m = 0; m < out.masks.size(); ++m) {
    const auto& mv = out.masks[m]->value;
    const int c = mv.dim(1), mh = mv.dim(2), mw = mv.dim(3);
    dca::Tensor<float> plane({mh, mw});
    for (int i = 0; i < mh; ++i)
      for (int j = 0; j < mw; ++j) {
        float s = 0;
        for (int ch = 0; ch < c; ++ch) s += mv.at(0, ch, i, j);
        plane.at(i, j) = s / static_cast<float>(c);
      }
    std::string base = "mask_" + sname + "_" + std::to_string(m + 1);
    dca::write_gray_png((fs::path(out_dir) / (base + ".png")).string(), dca::mask_to_gray(plane));
    if (per_channel) {
      for (int ch = 0; ch < c; ++ch) {
        dca::Tensor<float> p({mh, mw});
        for (int i = 0; i < mh; ++i)
          for (int j = 0; j < mw; ++j) p.at(i, j) = mv.at(0, ch, i, j);
        dca::write_gray_png((fs::path(out_dir) / (base + "_c" + std::to_string(ch) + ".png")).string(),
                            dca::mask_to_gray(p));
      }
    }
  }

  // Predicted label map alongside the masks, scaled for visibility.
  const auto& scores = out.main_scores->value;
  const int k = scores.dim(1), h = scores.dim(2), w = scores.dim(3);
  dca::Tensor<std::uint8_t> pred({h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (scores.at(0, c, i, j) > scores.at(0, best, i, j)) best = c;
      pred.at(i, j) = static_cast<std::uint8_t>(best * 255 / std::max(1, k - 1));
    }
  dca::write_gray_png((fs::path(out_dir) / "prediction.png").string(), pred);
  std::cout << "wrote " << out.masks.size() << " mask images and prediction.png to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCANet: dense context-aware semantic segmentation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, ckpt_path, image_path, out_path, scales_csv, pred_dir, level = "fast";
  int seed = -1;
  bool per_channel = false;
  std::vector<std::string> overrides;

  auto* train = app.add_subcommand("train", "Train a model from a JSON config");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "Output directory for checkpoints and logs")->required();
  train->add_option("--seed", seed, "Override both model and train seeds");
  train->add_option("--set", overrides, "Dotted config override, e.g. train.max_iter=200");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its validation split");
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out_path, "Report JSON path (stdout if omitted)");
  eval->add_option("--scales", scales_csv, "Comma-separated input scales, e.g. 0.75,1.0,1.25");
  eval->add_option("--pred-dir", pred_dir, "Also write per-image predicted label maps here");

  auto* viz = app.add_subcommand("viz-masks", "Export attention masks for one image");
  viz->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  viz->add_option("--image", image_path, "Input RGB PNG")->required()->check(CLI::ExistingFile);
  viz->add_option("--out", out_dir, "Output directory")->required();
  viz->add_flag("--per-channel", per_channel, "Also write one image per mask channel");

  auto* check = app.add_subcommand("check", "Run the self-check suite");
  check->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, out_dir, seed, overrides);
    if (eval->parsed()) return cmd_eval(ckpt_path, out_path, scales_csv, pred_dir);
    if (viz->parsed()) return cmd_viz_masks(ckpt_path, image_path, out_dir, per_channel);
    if (check->parsed()) return dca::print_check_results(dca::run_check_suite(level)) == 0 ? 0 : 1;
  } catch (const dca::TrainAbortError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
