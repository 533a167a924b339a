#include "dca/augment.hpp"

#include <cmath>

namespace dca {

namespace {

constexpr float kPi = 3.14159265358979323846f;

float sample_bilinear(const Tensor<float>& img, int c, float y, float x, float fill) {
  const int h = img.dim(1), w = img.dim(2);
  if (y < -0.5f || y > h - 0.5f || x < -0.5f || x > w - 0.5f) return fill;
  float cy = std::min(std::max(y, 0.f), static_cast<float>(h - 1));
  float cx = std::min(std::max(x, 0.f), static_cast<float>(w - 1));
  int y0 = static_cast<int>(cy), x0 = static_cast<int>(cx);
  int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  float wy = cy - y0, wx = cx - x0;
  auto px = [&](int i, int j) { return img.v[(static_cast<std::size_t>(c) * h + i) * w + j]; };
  return (1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x1)) + wy * ((1 - wx) * px(y1, x0) + wx * px(y1, x1));
}

int32_t sample_nearest(const Tensor<int32_t>& lab, float y, float x, int32_t fill) {
  const int h = lab.dim(0), w = lab.dim(1);
  int i = static_cast<int>(std::lround(y)), j = static_cast<int>(std::lround(x));
  if (i < 0 || i >= h || j < 0 || j >= w) return fill;
  return lab.v[static_cast<std::size_t>(i) * w + j];
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(scale_min > 0) || scale_max < scale_min) throw std::invalid_argument("AugmentConfig: bad scale range");
  if (scale_min < 0.5f - 1e-6f || scale_max > 2.0f + 1e-6f)
    throw std::invalid_argument("AugmentConfig: scale range must stay within [0.5, 2.0]");
  if (rotate_deg < 0 || rotate_deg > 10.f + 1e-6f)
    throw std::invalid_argument("AugmentConfig: rotation range must stay within [-10, 10] degrees");
  if (crop_size < 8) throw std::invalid_argument("AugmentConfig: crop_size too small");
}

SegmentationSample mirror_sample(const SegmentationSample& s) {
  SegmentationSample out;
  const int h = s.height(), w = s.width();
  out.image = Tensor<float>(s.image.shape);
  out.labels = Tensor<int32_t>(s.labels.shape);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out.image.v[(static_cast<std::size_t>(c) * h + i) * w + j] =
            s.image.v[(static_cast<std::size_t>(c) * h + i) * w + (w - 1 - j)];
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      out.labels.v[static_cast<std::size_t>(i) * w + j] = s.labels.v[static_cast<std::size_t>(i) * w + (w - 1 - j)];
  out.present = s.present;
  return out;
}

SegmentationSample scale_sample(const SegmentationSample& s, float factor) {
  if (!(factor > 0)) throw std::invalid_argument("scale_sample: factor must be positive");
  const int h = s.height(), w = s.width();
  const int oh = std::max(1, static_cast<int>(std::lround(h * factor)));
  const int ow = std::max(1, static_cast<int>(std::lround(w * factor)));
  SegmentationSample out;
  out.image = Tensor<float>({3, oh, ow});
  out.labels = Tensor<int32_t>({oh, ow});
  for (int i = 0; i < oh; ++i) {
    float sy = (i + 0.5f) * h / oh - 0.5f;
    for (int j = 0; j < ow; ++j) {
      float sx = (j + 0.5f) * w / ow - 0.5f;
      for (int c = 0; c < 3; ++c)
        out.image.v[(static_cast<std::size_t>(c) * oh + i) * ow + j] = sample_bilinear(s.image, c, sy, sx, 0.f);
      float ny = std::min(std::max(sy, 0.f), static_cast<float>(h - 1));
      float nx = std::min(std::max(sx, 0.f), static_cast<float>(w - 1));
      out.labels.v[static_cast<std::size_t>(i) * ow + j] = sample_nearest(s.labels, ny, nx, 0);
    }
  }
  out.present = compute_present(out.labels, static_cast<int>(s.present.size()));
  return out;
}

SegmentationSample rotate_sample(const SegmentationSample& s, float degrees, const std::array<float, 3>& fill,
                                 int ignore_index) {
  const int h = s.height(), w = s.width();
  const float rad = degrees * kPi / 180.f;
  const float cs = std::cos(rad), sn = std::sin(rad);
  const float cy = (h - 1) / 2.f, cx = (w - 1) / 2.f;
  SegmentationSample out;
  out.image = Tensor<float>(s.image.shape);
  out.labels = Tensor<int32_t>(s.labels.shape);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      // inverse rotation of the output pixel center
      float dy = i - cy, dx = j - cx;
      float sy = cs * dy + sn * dx + cy;
      float sx = -sn * dy + cs * dx + cx;
      for (int c = 0; c < 3; ++c)
        out.image.v[(static_cast<std::size_t>(c) * h + i) * w + j] = sample_bilinear(s.image, c, sy, sx, fill[c]);
      out.labels.v[static_cast<std::size_t>(i) * w + j] = sample_nearest(s.labels, sy, sx, ignore_index);
    }
  out.present = compute_present(out.labels, static_cast<int>(s.present.size()), ignore_index);
  return out;
}

Tensor<float> gaussian_blur(const Tensor<float>& image, float sigma) {
  if (sigma <= 0.f) return image;
  const int h = image.dim(1), w = image.dim(2);
  const int radius = std::max(1, static_cast<int>(std::ceil(2.f * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  float sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5f * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (float& e : kernel) e /= sum;
  Tensor<float> tmp(image.shape), out(image.shape);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        float acc = 0;
        for (int t = -radius; t <= radius; ++t) {
          int jj = std::min(std::max(j + t, 0), w - 1);
          acc += kernel[t + radius] * image.v[(static_cast<std::size_t>(c) * h + i) * w + jj];
        }
        tmp.v[(static_cast<std::size_t>(c) * h + i) * w + j] = acc;
      }
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        float acc = 0;
        for (int t = -radius; t <= radius; ++t) {
          int ii = std::min(std::max(i + t, 0), h - 1);
          acc += kernel[t + radius] * tmp.v[(static_cast<std::size_t>(c) * h + ii) * w + j];
        }
        out.v[(static_cast<std::size_t>(c) * h + i) * w + j] = acc;
      }
  return out;
}

SegmentationSample crop_pad_sample(const SegmentationSample& s, int crop_size, const std::array<float, 3>& fill,
                                   std::mt19937& rng, int ignore_index) {
  const int h = s.height(), w = s.width();
  int off_y, off_x;  // offset of the crop window in source coordinates; negative means padding
  if (h >= crop_size) {
    std::uniform_int_distribution<int> d(0, h - crop_size);
    off_y = d(rng);
  } else {
    off_y = -(crop_size - h) / 2;
  }
  if (w >= crop_size) {
    std::uniform_int_distribution<int> d(0, w - crop_size);
    off_x = d(rng);
  } else {
    off_x = -(crop_size - w) / 2;
  }
  SegmentationSample out;
  out.image = Tensor<float>({3, crop_size, crop_size});
  out.labels = Tensor<int32_t>({crop_size, crop_size});
  for (int i = 0; i < crop_size; ++i)
    for (int j = 0; j < crop_size; ++j) {
      int si = i + off_y, sj = j + off_x;
      bool in = si >= 0 && si < h && sj >= 0 && sj < w;
      for (int c = 0; c < 3; ++c)
        out.image.v[(static_cast<std::size_t>(c) * crop_size + i) * crop_size + j] =
            in ? s.image.v[(static_cast<std::size_t>(c) * h + si) * w + sj] : fill[c];
      out.labels.v[static_cast<std::size_t>(i) * crop_size + j] =
          in ? s.labels.v[static_cast<std::size_t>(si) * w + sj] : ignore_index;
    }
  out.present = compute_present(out.labels, static_cast<int>(s.present.size()), ignore_index);
  return out;
}

SegmentationSample augment(const SegmentationSample& s, const AugmentConfig& cfg, std::mt19937& rng) {
  cfg.validate();
  SegmentationSample out = s;
  std::uniform_real_distribution<float> coin(0.f, 1.f);
  if (cfg.mirror && coin(rng) < 0.5f) out = mirror_sample(out);
  std::uniform_real_distribution<float> scale_d(cfg.scale_min, cfg.scale_max);
  out = scale_sample(out, scale_d(rng));
  if (cfg.rotate_deg > 0) {
    std::uniform_real_distribution<float> rot_d(-cfg.rotate_deg, cfg.rotate_deg);
    out = rotate_sample(out, rot_d(rng), cfg.pad_mean);
  }
  if (cfg.blur && coin(rng) < 0.5f) {
    std::uniform_real_distribution<float> sigma_d(0.f, 1.f);
    out.image = gaussian_blur(out.image, sigma_d(rng));
  }
  return crop_pad_sample(out, cfg.crop_size, cfg.pad_mean, rng);
}

}  // namespace dca
