#include "dca/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace dca {

std::pair<Dataset, Dataset> build_datasets(const DataConfig& d) {
  if (!d.path.empty()) {
    // directory-layout dataset: train/ and val/ subdirectories
    return {load_dataset(d.path + "/train"), load_dataset(d.path + "/val")};
  }
  Dataset train = generate_synth_dataset(d.synthetic);
  SynthSpec val_spec = d.synthetic;
  val_spec.num_images = d.val_images;
  val_spec.seed = d.synthetic.seed + 9001u;  // disjoint stream from the train split
  Dataset val = generate_synth_dataset(val_spec);
  return {std::move(train), std::move(val)};
}

namespace {

StructureKind variant_structure(const std::string& v) {
  if (v == "baseline") return StructureKind::None;
  if (v == "crs") return StructureKind::Crs;
  if (v == "cascade") return StructureKind::Cascade;
  if (v == "pyramid") return StructureKind::Pyramid;
  throw std::invalid_argument("run_ordering_experiment: unknown variant '" + v + "'");
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

OrderingTable run_ordering_experiment(const std::vector<std::string>& variants, const SynthSpec& spec,
                                      const ExperimentConfig& base_cfg, const std::vector<int>& seeds,
                                      bool verbose) {
  if (variants.empty()) throw std::invalid_argument("run_ordering_experiment: no variants");
  if (seeds.size() < 3 && variants.size() > 1)
    throw std::invalid_argument("run_ordering_experiment: need at least 3 seeds");
  for (const auto& v : variants) variant_structure(v);

  DataConfig dc = base_cfg.data;
  dc.synthetic = spec;
  auto [train_ds, val_ds] = build_datasets(dc);

  OrderingTable table;
  table.complete = true;
  for (const auto& variant : variants)
    for (int seed : seeds) {
      ExperimentConfig cfg = base_cfg;
      cfg.data = dc;
      cfg.model.structure = variant_structure(variant);
      cfg.model.num_classes = spec.num_classes;
      cfg.model.seed = seed;
      cfg.train.seed = seed;
      OrderingRun run{variant, seed, 0, false};
      try {
        SegModel<float> model(cfg.model);
        train_model(model, train_ds, cfg, "");
        run.miou = evaluate_model(model, val_ds, {1.0}).mean_iou;
        run.ok = true;
      } catch (const TrainAbortError&) {
        table.complete = false;
      }
      if (verbose)
        std::fprintf(stderr, "[ordering] %-8s seed=%d mIoU=%.4f%s\n", variant.c_str(), seed, run.miou,
                     run.ok ? "" : " (aborted)");
      table.runs.push_back(run);
    }

  for (const auto& variant : variants) {
    std::vector<double> xs;
    for (const auto& r : table.runs)
      if (r.variant == variant && r.ok) xs.push_back(r.miou);
    if (!xs.empty()) table.median_miou[variant] = median(xs);
  }
  for (const auto& a : variants)
    for (const auto& b : variants) {
      if (a == b) continue;
      int wins = 0;
      for (int seed : seeds) {
        const OrderingRun* ra = nullptr;
        const OrderingRun* rb = nullptr;
        for (const auto& r : table.runs) {
          if (r.seed == seed && r.variant == a) ra = &r;
          if (r.seed == seed && r.variant == b) rb = &r;
        }
        if (ra && rb && ra->ok && rb->ok && ra->miou > rb->miou) ++wins;
      }
      table.pair_wins[a + ">" + b] = wins;
    }
  return table;
}

std::string ordering_table_str(const OrderingTable& t) {
  std::ostringstream os;
  os << "variant   seed   mIoU\n";
  char buf[80];
  for (const auto& r : t.runs) {
    std::snprintf(buf, sizeof(buf), "%-9s %-6d %.4f%s\n", r.variant.c_str(), r.seed, r.miou, r.ok ? "" : " (aborted)");
    os << buf;
  }
  os << "medians:";
  for (const auto& [v, m] : t.median_miou) {
    std::snprintf(buf, sizeof(buf), " %s=%.4f", v.c_str(), m);
    os << buf;
  }
  os << (t.complete ? "" : "  [INCOMPLETE]") << "\n";
  return os.str();
}

}  // namespace dca
