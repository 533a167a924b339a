#pragma once

#include <cstdint>
#include <vector>

#include "dca/tensor.hpp"

namespace dca {

// K x K confusion counts; counts[gt][pred]. Accumulation is pure summation,
// so shards can be merged in any order.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void accumulate(const Tensor<int32_t>& pred, const Tensor<int32_t>& gt, int ignore_index = 255);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return k_; }
  std::uint64_t count(int gt, int pred) const { return counts_[static_cast<std::size_t>(gt) * k_ + pred]; }
  std::uint64_t& count(int gt, int pred) { return counts_[static_cast<std::size_t>(gt) * k_ + pred]; }
  std::uint64_t total() const;

 private:
  int k_;
  std::vector<std::uint64_t> counts_;
};

struct IouResult {
  double mean_iou = 0;
  std::vector<double> per_class;   // NaN for classes with empty union
  bool defined = false;            // false when every class has empty union
};

IouResult mean_iou(const ConfusionMatrix& cm);

struct PixelAccResult {
  double accuracy = 0;
  bool defined = false;  // false when no pixel was evaluated
};

PixelAccResult pixel_accuracy(const ConfusionMatrix& cm);

}  // namespace dca
