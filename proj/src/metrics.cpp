#include "dca/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dca {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("ConfusionMatrix: num_classes must be >= 1");
  counts_.assign(static_cast<std::size_t>(k_) * k_, 0);
}

void ConfusionMatrix::accumulate(const Tensor<int32_t>& pred, const Tensor<int32_t>& gt, int ignore_index) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("ConfusionMatrix::accumulate: shape mismatch");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    int g = gt.v[i];
    if (g == ignore_index) continue;
    int p = pred.v[i];
    if (g < 0 || g >= k_ || p < 0 || p >= k_)
      throw std::invalid_argument("ConfusionMatrix::accumulate: label value out of range: gt=" + std::to_string(g) +
                                  " pred=" + std::to_string(p) + " K=" + std::to_string(k_));
    ++counts_[static_cast<std::size_t>(g) * k_ + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw std::invalid_argument("ConfusionMatrix::merge: size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

IouResult mean_iou(const ConfusionMatrix& cm) {
  const int k = cm.num_classes();
  IouResult res;
  res.per_class.assign(k, std::numeric_limits<double>::quiet_NaN());
  double sum = 0;
  int counted = 0;
  for (int c = 0; c < k; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += cm.count(c, j);
      col += cm.count(j, c);
    }
    std::uint64_t inter = cm.count(c, c);
    std::uint64_t uni = row + col - inter;
    if (uni == 0) continue;  // class absent from both gt and prediction
    res.per_class[c] = static_cast<double>(inter) / static_cast<double>(uni);
    sum += res.per_class[c];
    ++counted;
  }
  if (counted > 0) {
    res.mean_iou = sum / counted;
    res.defined = true;
  }
  return res;
}

PixelAccResult pixel_accuracy(const ConfusionMatrix& cm) {
  PixelAccResult res;
  std::uint64_t total = cm.total();
  if (total == 0) return res;
  std::uint64_t diag = 0;
  for (int c = 0; c < cm.num_classes(); ++c) diag += cm.count(c, c);
  res.accuracy = static_cast<double>(diag) / static_cast<double>(total);
  res.defined = true;
  return res;
}

}  // namespace dca
