#include "dca/infer.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace dca {

Tensor<float> resize_image(const Tensor<float>& image, int oh, int ow) {
  if (image.rank() != 3) throw std::invalid_argument("resize_image: [c, h, w] image required");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (oh == h && ow == w) return image;
  Tensor<float> out({c, oh, ow});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < oh; ++i) {
      float sy = (i + 0.5f) * h / oh - 0.5f;
      float cy = std::min(std::max(sy, 0.f), static_cast<float>(h - 1));
      int y0 = static_cast<int>(cy), y1 = std::min(y0 + 1, h - 1);
      float wy = cy - y0;
      for (int j = 0; j < ow; ++j) {
        float sx = (j + 0.5f) * w / ow - 0.5f;
        float cx = std::min(std::max(sx, 0.f), static_cast<float>(w - 1));
        int x0 = static_cast<int>(cx), x1 = std::min(x0 + 1, w - 1);
        float wx = cx - x0;
        auto px = [&](int y, int x) { return image.v[(static_cast<std::size_t>(ch) * h + y) * w + x]; };
        out.v[(static_cast<std::size_t>(ch) * oh + i) * ow + j] =
            (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) + wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
      }
    }
  return out;
}

namespace {

// softmax over the class axis of [k, h, w]
Tensor<float> softmax_probs(const Tensor<float>& scores) {
  const int k = scores.dim(0), h = scores.dim(1), w = scores.dim(2);
  Tensor<float> p(scores.shape);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < plane; ++i) {
    float mx = scores.v[i];
    for (int c = 1; c < k; ++c) mx = std::max(mx, scores.v[static_cast<std::size_t>(c) * plane + i]);
    double z = 0;
    for (int c = 0; c < k; ++c) z += std::exp(static_cast<double>(scores.v[static_cast<std::size_t>(c) * plane + i] - mx));
    for (int c = 0; c < k; ++c)
      p.v[static_cast<std::size_t>(c) * plane + i] =
          static_cast<float>(std::exp(static_cast<double>(scores.v[static_cast<std::size_t>(c) * plane + i] - mx)) / z);
  }
  return p;
}

}  // namespace

Tensor<float> multi_scale_probs(SegModel<float>& model, const Tensor<float>& image, const std::vector<double>& scales) {
  if (scales.empty()) throw std::invalid_argument("multi_scale_probs: empty scale list");
  if (image.rank() != 3 || image.dim(0) != 3) throw std::invalid_argument("multi_scale_probs: [3, h, w] image required");
  const int h = image.dim(1), w = image.dim(2);
  const int k = model.config().num_classes;
  Tensor<float> acc({k, h, w});
  for (double s : scales) {
    if (!(s > 0)) throw std::invalid_argument("multi_scale_probs: nonpositive scale");
    const int sh = std::max(8, static_cast<int>(std::lround(h * s)));
    const int sw = std::max(8, static_cast<int>(std::lround(w * s)));
    Tensor<float> scaled = resize_image(image, sh, sw);
    Tensor<float> batch({1, 3, sh, sw});
    batch.v = scaled.v;
    auto fwd = model.forward(make_var(std::move(batch)), false);
    Tensor<float> scores({k, sh, sw});
    scores.v.assign(fwd.main_scores->value.v.begin(), fwd.main_scores->value.v.end());
    Tensor<float> probs = softmax_probs(scores);
    Tensor<float> back = resize_image(probs, h, w);
    for (std::size_t i = 0; i < acc.size(); ++i) acc.v[i] += back.v[i];
  }
  for (float& e : acc.v) e /= static_cast<float>(scales.size());
  return acc;
}

Tensor<int32_t> argmax_labels(const Tensor<float>& probs) {
  const int k = probs.dim(0), h = probs.dim(1), w = probs.dim(2);
  Tensor<int32_t> out({h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    float bv = probs.v[i];
    for (int c = 1; c < k; ++c) {
      float v = probs.v[static_cast<std::size_t>(c) * plane + i];
      if (v > bv) {
        bv = v;
        best = c;
      }
    }
    out.v[i] = best;
  }
  return out;
}

EvalReport evaluate_model(SegModel<float>& model, const Dataset& ds, const std::vector<double>& scales) {
  ConfusionMatrix cm(model.config().num_classes);
  for (const auto& s : ds.samples) {
    Tensor<float> probs = multi_scale_probs(model, s.image, scales);
    cm.accumulate(argmax_labels(probs), s.labels);
  }
  auto iou = mean_iou(cm);
  auto acc = pixel_accuracy(cm);
  EvalReport rep;
  rep.mean_iou = iou.mean_iou;
  rep.per_class_iou = iou.per_class;
  rep.pixel_acc = acc.accuracy;
  rep.num_pixels = cm.total();
  rep.defined = iou.defined && acc.defined;
  return rep;
}

nlohmann::json eval_report_json(const EvalReport& rep, const std::string& config_digest) {
  nlohmann::json per = nlohmann::json::array();
  for (double x : rep.per_class_iou) {
    if (std::isnan(x))
      per.push_back(nullptr);
    else
      per.push_back(x);
  }
  return nlohmann::json{{"mean_iou", rep.mean_iou},
                        {"pixel_acc", rep.pixel_acc},
                        {"per_class_iou", per},
                        {"num_pixels", rep.num_pixels},
                        {"config_digest", config_digest}};
}

}  // namespace dca
