#pragma once

#include "dca/data.hpp"

namespace dca {

struct AugmentConfig {
  bool mirror = true;
  float scale_min = 0.5f;
  float scale_max = 2.0f;
  float rotate_deg = 10.f;   // angle drawn from [-rotate_deg, rotate_deg]
  bool blur = true;          // sigma ~ U[0,1], applied with probability 0.5
  int crop_size = 64;
  std::array<float, 3> pad_mean{0.5f, 0.5f, 0.5f};

  void validate() const;
};

// Individual transforms; image is resampled bilinearly, labels with nearest
// neighbor, and `present` is recomputed from the transformed labels.
SegmentationSample mirror_sample(const SegmentationSample& s);
SegmentationSample scale_sample(const SegmentationSample& s, float factor);
SegmentationSample rotate_sample(const SegmentationSample& s, float degrees, const std::array<float, 3>& fill,
                                 int ignore_index = 255);
Tensor<float> gaussian_blur(const Tensor<float>& image, float sigma);
SegmentationSample crop_pad_sample(const SegmentationSample& s, int crop_size, const std::array<float, 3>& fill,
                                   std::mt19937& rng, int ignore_index = 255);

// Random mirror, resize, rotation, Gaussian blur, then fixed-size crop.
SegmentationSample augment(const SegmentationSample& s, const AugmentConfig& cfg, std::mt19937& rng);

}  // namespace dca
