#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dca/tensor.hpp"

namespace dca {

// One training example: float image in [0,1], dense labels, and the
// multi-hot present-class vector used by semantic supervision.
struct SegmentationSample {
  Tensor<float> image;          // [3, h, w]
  Tensor<int32_t> labels;       // [h, w], values in {0..K-1} or ignore (255)
  std::vector<std::uint8_t> present;  // length K

  int height() const { return labels.dim(0); }
  int width() const { return labels.dim(1); }
};

// present[k] = 1 iff class k appears in labels, skipping the ignore index.
std::vector<std::uint8_t> compute_present(const Tensor<int32_t>& labels, int num_classes, int ignore_index = 255);

struct SynthSpec {
  int num_images = 200;
  int image_size = 64;
  int num_classes = 5;
  int min_shapes = 3;
  int max_shapes = 6;
  unsigned seed = 7;

  void validate() const;
};

struct Dataset {
  std::vector<SegmentationSample> samples;
  int num_classes = 0;

  // mean color over all images, used as pad fill
  std::array<float, 3> mean_color() const;
};

// Deterministic dataset of colored geometric shapes on a tinted, textured
// background. Each image carries a global color tint; shape classes share
// overlapping local color ranges, so class identity is disambiguated by the
// image-wide context rather than by any single pixel.
Dataset generate_synth_dataset(const SynthSpec& spec);

// Median-frequency class weights computed over a dataset, clipped to
// [0.1, 10]. Classes absent from the dataset get weight 1.
std::vector<float> median_frequency_weights(const Dataset& ds, int ignore_index = 255);

// Directory layout: images/NNNN.png, labels/NNNN.png, manifest.json with
// per-image paths and present-class vectors.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace dca
