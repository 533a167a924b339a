#pragma once

#include <optional>

#include "dca/layers.hpp"

namespace dca {

struct DcaConfig {
  int in_channels_context = 0;
  int in_channels_spatial = 0;
  int width = 0;            // working channel width C of both pathways
  int context_scale = 1;    // pooled grid size r
  bool semantic_supervision = false;
  int num_classes = 0;      // used only when semantic_supervision is on
  int sem_head_width = 256; // 1x1 reduction target of the semantic head

  void validate() const {
    if (context_scale < 1) throw std::invalid_argument("DcaConfig: context_scale must be >= 1");
    if (width < 1) throw std::invalid_argument("DcaConfig: width must be >= 1");
    if (in_channels_context < 1 || in_channels_spatial < 1)
      throw std::invalid_argument("DcaConfig: input channel counts must be >= 1");
    if (semantic_supervision && num_classes < 1)
      throw std::invalid_argument("DcaConfig: num_classes must be >= 1 when semantic supervision is on");
  }
};

// Context pooling: adaptive average pooling to an r x r grid. r = 1 is
// global average pooling.
template <typename T>
Var<T> context_pool(const Var<T>& f, int r) {
  if (r < 1) throw std::invalid_argument("context_pool: r must be >= 1, got " + std::to_string(r));
  return adaptive_avg_pool(f, r);
}

// Attention mask: elementwise sigmoid of the shared context features.
template <typename T>
Var<T> compute_mask(const Var<T>& g) {
  return sigmoid(g);
}

// Spatial-pathway update: mask (x) transformed features + residual.
// residual is the original spatial input or, at a width change, the output
// of the first spatial conv layer.
template <typename T>
Var<T> update_spatial(const Var<T>& residual, const Var<T>& mask, const Var<T>& fs_transformed) {
  if (!mask->value.same_shape(fs_transformed->value) || !mask->value.same_shape(residual->value))
    throw std::invalid_argument("update_spatial: shape mismatch " + shape_str(mask->value.shape) + " vs " +
                                shape_str(fs_transformed->value.shape) + " vs " + shape_str(residual->value.shape));
  return add(mul(mask, fs_transformed), residual);
}

// Contextual-pathway update: channel concatenation, context features first.
template <typename T>
Var<T> update_context(const Var<T>& g, const Var<T>& fs_hat) {
  if (g->value.dim(2) != fs_hat->value.dim(2) || g->value.dim(3) != fs_hat->value.dim(3))
    throw std::invalid_argument("update_context: spatial dims mismatch " + shape_str(g->value.shape) + " vs " +
                                shape_str(fs_hat->value.shape));
  return concat_channels<T>({g, fs_hat});
}

// One Dense Context-Aware module: pooled context transform shared between
// the attention mask and the concatenation output, gated residual spatial
// update, and an optional multi-label semantic head on the contextual
// output.
template <typename T>
class DcaModule {
 public:
  struct Output {
    Var<T> context;   // 2*width channels
    Var<T> spatial;   // width channels
    Var<T> mask;      // width channels, entries in (0, 1)
    std::optional<Var<T>> sem_logits;  // [n, num_classes]
  };

  DcaModule() = default;
  DcaModule(const DcaConfig& cfg, std::mt19937& rng) : cfg_(cfg) {
    cfg_.validate();
    ctx1_ = ConvBnRelu<T>(cfg.in_channels_context, cfg.width, 1, 1, 0, 1, rng);
    ctx2_ = ConvBnRelu<T>(cfg.width, cfg.width, 3, 1, 1, 1, rng);
    spa1_ = ConvBnRelu<T>(cfg.in_channels_spatial, cfg.width, 3, 1, 1, 1, rng);
    spa2_ = ConvBnRelu<T>(cfg.width, cfg.width, 3, 1, 1, 1, rng);
    // Start the spatial refinement as a no-op so fs_hat == residual at init.
    spa2_.bn.gamma->value.fill(T(0));
    if (cfg.semantic_supervision) {
      int reduced = std::min(cfg.sem_head_width, 2 * cfg.width);
      sem_reduce_ = Conv2d<T>(2 * cfg.width, reduced, 1, 1, 0, 1, rng);
      sem_fc_ = Linear<T>(reduced, cfg.num_classes, rng);
    }
  }

  const DcaConfig& config() const { return cfg_; }

  // Two conv-bn-relu layers on the pooled context, bilinearly resized to the
  // spatial pathway's size. The result G feeds both the mask and the
  // concatenation output.
  Var<T> context_transform(const Var<T>& fc_pooled, int target_h, int target_w, bool training) {
    if (fc_pooled->value.dim(1) != cfg_.in_channels_context)
      throw std::invalid_argument("context_transform: expected " + std::to_string(cfg_.in_channels_context) +
                                  " channels, got " + std::to_string(fc_pooled->value.dim(1)));
    Var<T> g = ctx1_.forward(fc_pooled, training);
    g = ctx2_.forward(g, training);
    return bilinear_resize(g, target_h, target_w);
  }

  Var<T> spatial_transform(const Var<T>& fs, bool training) {
    return spa2_.forward(spatial_layer1(fs, training), training);
  }

  Var<T> spatial_layer1(const Var<T>& fs, bool training) {
    if (fs->value.dim(1) != cfg_.in_channels_spatial)
      throw std::invalid_argument("spatial_transform: expected " + std::to_string(cfg_.in_channels_spatial) +
                                  " channels, got " + std::to_string(fs->value.dim(1)));
    return spa1_.forward(fs, training);
  }

  Var<T> semantic_head(const Var<T>& fc_out, bool) {
    if (!cfg_.semantic_supervision) throw std::invalid_argument("semantic_head: semantic supervision is off");
    Var<T> r = sem_reduce_.forward(fc_out);
    return sem_fc_.forward(global_avg_pool(r));
  }

  Output forward(const Var<T>& fc, const Var<T>& fs, bool training) {
    if (fc->value.dim(2) != fs->value.dim(2) || fc->value.dim(3) != fs->value.dim(3))
      throw std::invalid_argument("DcaModule: pathway inputs not spatially aligned: " + shape_str(fc->value.shape) +
                                  " vs " + shape_str(fs->value.shape));
    const int h = fs->value.dim(2), w = fs->value.dim(3);
    Var<T> pooled = context_pool(fc, cfg_.context_scale);
    Var<T> g = context_transform(pooled, h, w, training);
    Var<T> mask = compute_mask(g);
    if (force_zero_mask) mask = make_var(Tensor<T>(mask->value.shape));  // test hook
    Var<T> r1 = spatial_layer1(fs, training);
    Var<T> fs_t = spa2_.forward(r1, training);
    Var<T> residual = (cfg_.in_channels_spatial == cfg_.width) ? fs : r1;
    Var<T> fs_hat = update_spatial(residual, mask, fs_t);
    Var<T> fc_hat = update_context(g, fs_hat);
    Output out{fc_hat, fs_hat, mask, std::nullopt};
    if (cfg_.semantic_supervision) out.sem_logits = semantic_head(fc_hat, training);
    return out;
  }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    ctx1_.collect(prefix + ".ctx1", sd);
    ctx2_.collect(prefix + ".ctx2", sd);
    spa1_.collect(prefix + ".spa1", sd);
    spa2_.collect(prefix + ".spa2", sd);
    if (cfg_.semantic_supervision) {
      sem_reduce_.collect(prefix + ".sem_reduce", sd);
      sem_fc_.collect(prefix + ".sem_fc", sd);
    }
  }

  // Forces the attention mask to zero so tests can isolate the residual path.
  bool force_zero_mask = false;

 private:
  DcaConfig cfg_;
  ConvBnRelu<T> ctx1_, ctx2_;
  ConvBnRelu<T> spa1_, spa2_;
  Conv2d<T> sem_reduce_;
  Linear<T> sem_fc_;
};

}  // namespace dca
