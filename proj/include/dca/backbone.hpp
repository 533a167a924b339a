#pragma once

#include "dca/layers.hpp"

namespace dca {

// Dilated residual backbone at output stride 8. The stem and first two
// stages each halve resolution; the last two stages keep stride 1 with
// dilation rates 2 and 4. The penultimate stage is tapped for the auxiliary
// head.
template <typename T>
class Backbone {
 public:
  struct Features {
    Var<T> aux;   // penultimate stage, stride 8
    Var<T> main;  // final stage, stride 8
  };

  Backbone() = default;
  Backbone(std::vector<int> stage_widths, std::mt19937& rng) : widths_(std::move(stage_widths)) {
    if (widths_.size() != 4) throw std::invalid_argument("Backbone: expected 4 stage widths");
    stem_ = ConvBnRelu<T>(3, widths_[0], 3, 2, 1, 1, rng);
    stages_.emplace_back(widths_[0], widths_[1], 2, 1, rng);
    stages_.emplace_back(widths_[1], widths_[2], 2, 1, rng);
    stages_.emplace_back(widths_[2], widths_[3], 1, 2, rng);
    stages_.emplace_back(widths_[3], widths_[3], 1, 4, rng);
  }

  Features forward(const Var<T>& image, bool training) {
    check_rank4(image->value, "backbone input");
    if (image->value.dim(1) != 3) throw std::invalid_argument("backbone: expected 3-channel input");
    if (image->value.dim(2) % 8 != 0 || image->value.dim(3) % 8 != 0)
      throw std::invalid_argument("backbone: spatial dims must be divisible by 8, got " + shape_str(image->value.shape));
    Var<T> h = stem_.forward(image, training);
    Var<T> aux;
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      h = stages_[i].forward(h, training);
      if (i == stages_.size() - 2) aux = h;
    }
    return {aux, h};
  }

  int main_channels() const { return widths_[3]; }
  int aux_channels() const { return widths_[3]; }
  const std::vector<int>& stage_widths() const { return widths_; }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    stem_.collect(prefix + ".stem", sd);
    for (std::size_t i = 0; i < stages_.size(); ++i)
      stages_[i].collect(prefix + ".stage" + std::to_string(i + 1), sd);
  }

 private:
  struct BasicBlock {
    BasicBlock(int in_c, int out_c, int stride, int dil, std::mt19937& rng)
        : c1(in_c, out_c, 3, stride, dil, dil, rng), c2(out_c, out_c, 3, 1, dil, dil, rng), bn2(out_c),
          has_proj(in_c != out_c || stride != 1) {
      if (has_proj) {
        proj = Conv2d<T>(in_c, out_c, 1, stride, 0, 1, rng);
        bnp = BatchNorm2d<T>(out_c);
      }
      // Identity-start residual: the block contributes nothing until trained.
      bn2.gamma->value.fill(T(0));
    }
    Var<T> forward(const Var<T>& x, bool training) {
      Var<T> h = bn2.forward(c2.forward(c1.forward(x, training)), training);
      Var<T> skip = has_proj ? bnp.forward(proj.forward(x), training) : x;
      return relu(add(skip, h));
    }
    void collect(const std::string& prefix, StateDict<T>& sd) {
      c1.collect(prefix + ".c1", sd);
      c2.collect(prefix + ".c2", sd);
      bn2.collect(prefix + ".bn2", sd);
      if (has_proj) {
        proj.collect(prefix + ".proj", sd);
        bnp.collect(prefix + ".bnp", sd);
      }
    }
    ConvBnRelu<T> c1;
    Conv2d<T> c2;
    BatchNorm2d<T> bn2;
    Conv2d<T> proj;
    BatchNorm2d<T> bnp;
    bool has_proj = false;
  };

  std::vector<int> widths_;
  ConvBnRelu<T> stem_;
  std::vector<BasicBlock> stages_;
};

}  // namespace dca
