#pragma once

#include <nlohmann/json_fwd.hpp>

#include "dca/config.hpp"
#include "dca/data.hpp"
#include "dca/metrics.hpp"

namespace dca {

// Plain bilinear resize of a [3, h, w] float image (no autograd).
Tensor<float> resize_image(const Tensor<float>& image, int oh, int ow);

// Averaged class-probability map over the given input scales: the image is
// resized per scale, the model evaluated in inference mode, and the softmax
// probability maps resized back and averaged. Returns [K, h, w].
Tensor<float> multi_scale_probs(SegModel<float>& model, const Tensor<float>& image, const std::vector<double>& scales);

Tensor<int32_t> argmax_labels(const Tensor<float>& probs);

struct EvalReport {
  double mean_iou = 0;
  double pixel_acc = 0;
  std::vector<double> per_class_iou;
  std::uint64_t num_pixels = 0;
  bool defined = false;
};

EvalReport evaluate_model(SegModel<float>& model, const Dataset& ds, const std::vector<double>& scales);

nlohmann::json eval_report_json(const EvalReport& rep, const std::string& config_digest);

}  // namespace dca
