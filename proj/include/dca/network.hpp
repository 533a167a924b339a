#pragma once

#include "dca/backbone.hpp"
#include "dca/losses.hpp"
#include "dca/structures.hpp"

namespace dca {

enum class StructureKind { None, Cascade, Pyramid, Crs };

inline const char* structure_name(StructureKind k) {
  switch (k) {
    case StructureKind::None: return "none";
    case StructureKind::Cascade: return "cascade";
    case StructureKind::Pyramid: return "pyramid";
    case StructureKind::Crs: return "crs";
  }
  return "?";
}

struct ModelConfig {
  std::vector<int> backbone_widths{32, 64, 128, 256};
  StructureKind structure = StructureKind::Cascade;
  int width = 512;
  std::vector<int> schedule{1, 4, 8, 16};        // cascade / crs depth
  std::vector<int> branch_scales{1, 2, 3, 6};    // pyramid
  int modules_per_branch = 2;
  FinalTap final_tap = FinalTap::Context;
  int num_classes = 21;
  bool semantic_supervision = false;
  int sem_head_width = 256;
  int aux_width = 64;
  int seed = 1;
};

// Backbone + long-range structure + segmentation head + auxiliary head.
template <typename T>
class SegModel {
 public:
  struct Forward {
    Var<T> main_scores;              // [n, K, out_h, out_w]
    Var<T> aux_scores;               // [n, K, out_h, out_w]
    std::vector<Var<T>> sem_logits;  // one per supervised DCA module
    std::vector<Var<T>> masks;       // one per DCA module
  };

  SegModel() = default;
  explicit SegModel(const ModelConfig& cfg) : cfg_(cfg) {
    std::mt19937 rng(static_cast<unsigned>(cfg.seed));
    backbone_ = Backbone<T>(cfg.backbone_widths, rng);
    const int bb_c = backbone_.main_channels();
    int feat_c = bb_c;
    switch (cfg.structure) {
      case StructureKind::None:
        break;
      case StructureKind::Cascade:
        cascade_ = CascadeDca<T>(bb_c, cfg.width, {cfg.schedule}, cfg.final_tap, cfg.semantic_supervision,
                                 cfg.num_classes, cfg.sem_head_width, rng);
        feat_c = cfg.width;
        break;
      case StructureKind::Pyramid:
        pyramid_ = PyramidDca<T>(bb_c, cfg.width, {cfg.branch_scales}, cfg.modules_per_branch,
                                 cfg.semantic_supervision, cfg.num_classes, cfg.sem_head_width, rng);
        feat_c = cfg.width;
        break;
      case StructureKind::Crs:
        crs_ = CrsBaseline<T>(bb_c, static_cast<int>(cfg.schedule.size()), cfg.width, rng);
        feat_c = cfg.width;
        break;
    }
    classifier_ = Conv2d<T>(feat_c, cfg.num_classes, 1, 1, 0, 1, rng);
    aux_reduce_ = ConvBnRelu<T>(backbone_.aux_channels(), cfg.aux_width, 3, 1, 1, 1, rng);
    aux_classifier_ = Conv2d<T>(cfg.aux_width, cfg.num_classes, 1, 1, 0, 1, rng);
  }

  const ModelConfig& config() const { return cfg_; }

  int num_dca_modules() const {
    switch (cfg_.structure) {
      case StructureKind::Cascade: return static_cast<int>(cfg_.schedule.size());
      case StructureKind::Pyramid: return static_cast<int>(cfg_.branch_scales.size()) * cfg_.modules_per_branch;
      default: return 0;
    }
  }

  // Pads the image to a multiple of 8 (replicating the border), runs the
  // network, and returns score maps upsampled to (out_h, out_w).
  Forward forward(const Var<T>& image, bool training, int out_h = 0, int out_w = 0) {
    check_rank4(image->value, "SegModel input");
    const int h = image->value.dim(2), w = image->value.dim(3);
    if (out_h == 0) out_h = h;
    if (out_w == 0) out_w = w;
    Var<T> x = pad_to_multiple8(image);
    auto feats = backbone_.forward(x, training);

    Forward out;
    Var<T> features;
    switch (cfg_.structure) {
      case StructureKind::None:
        features = feats.main;
        break;
      case StructureKind::Cascade: {
        auto so = cascade_.forward(feats.main, training);
        features = so.features;
        out.masks = std::move(so.masks);
        out.sem_logits = std::move(so.sem_logits);
        break;
      }
      case StructureKind::Pyramid: {
        auto so = pyramid_.forward(feats.main, training);
        features = so.features;
        out.masks = std::move(so.masks);
        out.sem_logits = std::move(so.sem_logits);
        break;
      }
      case StructureKind::Crs:
        features = crs_.forward(feats.main, training);
        break;
    }
    // 8x upsampling to the (padded) input size, then crop away the padding
    // before any final resize.
    auto head = [&](const Var<T>& scores) {
      Var<T> up = bilinear_resize(scores, x->value.dim(2), x->value.dim(3));
      up = crop_spatial(up, h, w);
      return bilinear_resize(up, out_h, out_w);
    };
    out.main_scores = head(classifier_.forward(features));
    out.aux_scores = head(aux_classifier_.forward(aux_reduce_.forward(feats.aux, training)));
    return out;
  }

  StateDict<T> state_dict() {
    StateDict<T> sd;
    backbone_.collect("backbone", sd);
    switch (cfg_.structure) {
      case StructureKind::None: break;
      case StructureKind::Cascade: cascade_.collect("cascade", sd); break;
      case StructureKind::Pyramid: pyramid_.collect("pyramid", sd); break;
      case StructureKind::Crs: crs_.collect("crs", sd); break;
    }
    classifier_.collect("classifier", sd);
    aux_reduce_.collect("aux.reduce", sd);
    aux_classifier_.collect("aux.classifier", sd);
    return sd;
  }

  CascadeDca<T>& cascade() { return cascade_; }
  PyramidDca<T>& pyramid() { return pyramid_; }

 private:
  Var<T> pad_to_multiple8(const Var<T>& image) {
    const int n = image->value.dim(0), c = image->value.dim(1), h = image->value.dim(2), w = image->value.dim(3);
    const int ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
    if (ph == h && pw == w) return image;
    Tensor<T> y({n, c, ph, pw});
    for (int b = 0; b < n; ++b)
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < ph; ++i)
          for (int j = 0; j < pw; ++j)
            y.at(b, ch, i, j) = image->value.at(b, ch, std::min(i, h - 1), std::min(j, w - 1));
    auto out = make_op(std::move(y), {image});
    if (out->requires_grad)
      out->backprop = [o = out.get(), p = image.get(), n, c, h, w, ph, pw]() {
        auto& g = p->ensure_grad();
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < ph; ++i)
              for (int j = 0; j < pw; ++j)
                g.at(b, ch, std::min(i, h - 1), std::min(j, w - 1)) += o->grad.at(b, ch, i, j);
      };
    return out;
  }

  ModelConfig cfg_;
  Backbone<T> backbone_;
  CascadeDca<T> cascade_;
  PyramidDca<T> pyramid_;
  CrsBaseline<T> crs_;
  Conv2d<T> classifier_;
  ConvBnRelu<T> aux_reduce_;
  Conv2d<T> aux_classifier_;
};

}  // namespace dca
