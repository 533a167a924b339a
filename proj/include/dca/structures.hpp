#pragma once

#include "dca/dca_module.hpp"

namespace dca {

// Ordered context-pool sizes, one per DCA module position.
struct ScaleSchedule {
  std::vector<int> scales;

  static ScaleSchedule cascade_default() { return {{1, 4, 8, 16}}; }
  static ScaleSchedule pyramid_default() { return {{1, 2, 3, 6}}; }

  void validate() const {
    if (scales.empty()) throw std::invalid_argument("ScaleSchedule: empty schedule");
    for (int r : scales)
      if (r < 1) throw std::invalid_argument("ScaleSchedule: scale " + std::to_string(r) + " < 1");
  }
};

template <typename T>
struct StructureOutput {
  Var<T> features;                  // final map before the segmentation layer
  std::vector<Var<T>> masks;        // one per DCA module
  std::vector<Var<T>> sem_logits;   // one per supervised module
};

enum class FinalTap { Context, Spatial };

// Four DCA modules in sequence (default scales 1, 4, 8, 16); the backbone
// output feeds both pathways of the first module.
template <typename T>
class CascadeDca {
 public:
  CascadeDca() = default;
  CascadeDca(int in_channels, int width, ScaleSchedule schedule, FinalTap tap, bool semantic_supervision,
             int num_classes, int sem_head_width, std::mt19937& rng)
      : tap_(tap) {
    schedule.validate();
    const int n = static_cast<int>(schedule.scales.size());
    for (int i = 0; i < n; ++i) {
      DcaConfig cfg;
      cfg.in_channels_context = (i == 0) ? in_channels : 2 * width;
      cfg.in_channels_spatial = (i == 0) ? in_channels : width;
      cfg.width = width;
      cfg.context_scale = schedule.scales[i];
      cfg.semantic_supervision = semantic_supervision && (i == n - 1);  // last module only
      cfg.num_classes = cfg.semantic_supervision ? num_classes : 0;
      cfg.sem_head_width = sem_head_width;
      modules_.emplace_back(cfg, rng);
    }
    final_conv_ = Conv2d<T>(tap == FinalTap::Context ? 2 * width : width, width, 1, 1, 0, 1, rng);
  }

  StructureOutput<T> forward(const Var<T>& x, bool training) {
    StructureOutput<T> out;
    Var<T> fc = x, fs = x;
    for (auto& m : modules_) {
      auto mo = m.forward(fc, fs, training);
      out.masks.push_back(mo.mask);
      if (mo.sem_logits) out.sem_logits.push_back(*mo.sem_logits);
      fc = mo.context;
      fs = mo.spatial;
    }
    out.features = final_conv_.forward(tap_ == FinalTap::Context ? fc : fs);
    return out;
  }

  std::vector<DcaModule<T>>& modules() { return modules_; }
  int out_channels() const { return final_conv_.weight->value.dim(0); }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    for (std::size_t i = 0; i < modules_.size(); ++i) modules_[i].collect(prefix + ".dca" + std::to_string(i + 1), sd);
    final_conv_.collect(prefix + ".final_conv", sd);
  }

 private:
  std::vector<DcaModule<T>> modules_;
  Conv2d<T> final_conv_;
  FinalTap tap_ = FinalTap::Context;
};

// Four parallel branches (default scales 1, 2, 3, 6) of cascaded DCA modules
// behind a shared 3x3 reduction; branch spatial outputs are concatenated and
// fused by a 1x1 convolution.
template <typename T>
class PyramidDca {
 public:
  PyramidDca() = default;
  PyramidDca(int in_channels, int width, ScaleSchedule branch_scales, int modules_per_branch,
             bool semantic_supervision, int num_classes, int sem_head_width, std::mt19937& rng) {
    branch_scales.validate();
    if (modules_per_branch < 1) throw std::invalid_argument("PyramidDca: modules_per_branch must be >= 1");
    reduce_ = ConvBnRelu<T>(in_channels, width, 3, 1, 1, 1, rng);
    for (int b = 0; b < static_cast<int>(branch_scales.scales.size()); ++b) {
      branches_.emplace_back();
      for (int j = 0; j < modules_per_branch; ++j) {
        DcaConfig cfg;
        cfg.in_channels_context = (j == 0) ? width : 2 * width;
        cfg.in_channels_spatial = width;
        cfg.width = width;
        cfg.context_scale = branch_scales.scales[b];
        cfg.semantic_supervision = semantic_supervision && (j == modules_per_branch - 1);
        cfg.num_classes = cfg.semantic_supervision ? num_classes : 0;
        cfg.sem_head_width = sem_head_width;
        branches_.back().emplace_back(cfg, rng);
      }
    }
    final_conv_ = Conv2d<T>(static_cast<int>(branches_.size()) * width, width, 1, 1, 0, 1, rng);
  }

  StructureOutput<T> forward(const Var<T>& x, bool training) {
    StructureOutput<T> out;
    Var<T> reduced = reduce_.forward(x, training);
    std::vector<Var<T>> branch_outs;
    for (auto& branch : branches_) {
      Var<T> fc = reduced, fs = reduced;
      for (auto& m : branch) {
        auto mo = m.forward(fc, fs, training);
        out.masks.push_back(mo.mask);
        if (mo.sem_logits) out.sem_logits.push_back(*mo.sem_logits);
        fc = mo.context;
        fs = mo.spatial;
      }
      branch_outs.push_back(fs);
    }
    out.features = final_conv_.forward(concat_channels(branch_outs));
    return out;
  }

  std::vector<std::vector<DcaModule<T>>>& branches() { return branches_; }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    reduce_.collect(prefix + ".reduce", sd);
    for (std::size_t b = 0; b < branches_.size(); ++b)
      for (std::size_t j = 0; j < branches_[b].size(); ++j)
        branches_[b][j].collect(prefix + ".b" + std::to_string(b + 1) + ".dca" + std::to_string(j + 1), sd);
    final_conv_.collect(prefix + ".final_conv", sd);
  }

 private:
  ConvBnRelu<T> reduce_;
  std::vector<std::vector<DcaModule<T>>> branches_;
  Conv2d<T> final_conv_;
};

// Vanilla cascaded-residual structure of matching depth/width, the CRS
// ablation baseline.
template <typename T>
class CrsBaseline {
 public:
  CrsBaseline() = default;
  CrsBaseline(int in_channels, int depth, int width, std::mt19937& rng) {
    if (depth < 1) throw std::invalid_argument("CrsBaseline: depth must be >= 1");
    reduce_ = ConvBnRelu<T>(in_channels, width, 3, 1, 1, 1, rng);
    for (int i = 0; i < depth; ++i) blocks_.emplace_back(width, rng);
  }

  Var<T> forward(const Var<T>& x, bool training) {
    Var<T> h = reduce_.forward(x, training);
    for (auto& b : blocks_) h = b.forward(h, training);
    return h;
  }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    reduce_.collect(prefix + ".reduce", sd);
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i + 1), sd);
  }

 private:
  struct ResBlock {
    ResBlock(int width, std::mt19937& rng)
        : c1(width, width, 3, 1, 1, 1, rng), c2(width, width, 3, 1, 1, 1, rng), bn2(width) {
      bn2.gamma->value.fill(T(0));  // identity-start residual
    }
    Var<T> forward(const Var<T>& x, bool training) {
      Var<T> h = bn2.forward(c2.forward(c1.forward(x, training)), training);
      return relu(add(x, h));
    }
    void collect(const std::string& prefix, StateDict<T>& sd) {
      c1.collect(prefix + ".c1", sd);
      c2.collect(prefix + ".c2", sd);
      bn2.collect(prefix + ".bn2", sd);
    }
    ConvBnRelu<T> c1;
    Conv2d<T> c2;
    BatchNorm2d<T> bn2;
  };

  ConvBnRelu<T> reduce_;
  std::vector<ResBlock> blocks_;
};

}  // namespace dca
