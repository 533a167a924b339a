#pragma once

#include <map>

#include "dca/infer.hpp"
#include "dca/train.hpp"

namespace dca {

// Train/val split for a data config: synthetic generation (val seed derived
// from the train seed) or a directory-layout dataset.
std::pair<Dataset, Dataset> build_datasets(const DataConfig& d);

struct OrderingRun {
  std::string variant;
  int seed = 0;
  double miou = 0;
  bool ok = false;
};

struct OrderingTable {
  std::vector<OrderingRun> runs;
  std::map<std::string, double> median_miou;
  // win counts per ordered pair "a>b"
  std::map<std::string, int> pair_wins;
  bool complete = false;
};

// Table-1-style relative-ordering experiment at desk scale: trains each
// variant for each seed on the synthetic dataset and reports per-variant
// median mIoU plus pairwise win counts. Any aborted run marks the table
// incomplete.
OrderingTable run_ordering_experiment(const std::vector<std::string>& variants, const SynthSpec& spec,
                                      const ExperimentConfig& base_cfg, const std::vector<int>& seeds,
                                      bool verbose = false);

std::string ordering_table_str(const OrderingTable& t);

}  // namespace dca
