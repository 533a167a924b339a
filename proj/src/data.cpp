#include "dca/data.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dca/image_io.hpp"

namespace dca {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint8_t> compute_present(const Tensor<int32_t>& labels, int num_classes, int ignore_index) {
  std::vector<std::uint8_t> present(num_classes, 0);
  for (int32_t l : labels.v) {
    if (l == ignore_index) continue;
    if (l >= 0 && l < num_classes) present[l] = 1;
  }
  return present;
}

void SynthSpec::validate() const {
  if (num_images < 1) throw std::invalid_argument("SynthSpec: num_images must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("SynthSpec: need at least background + 1 class");
  if (min_shapes < 1 || max_shapes < min_shapes) throw std::invalid_argument("SynthSpec: bad shapes-per-image range");
  if (image_size < 24) throw std::invalid_argument("SynthSpec: image_size too small to place a shape");
}

std::array<float, 3> Dataset::mean_color() const {
  std::array<double, 3> acc{0, 0, 0};
  std::size_t n = 0;
  for (const auto& s : samples) {
    const std::size_t plane = s.image.size() / 3;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i) acc[c] += s.image.v[static_cast<std::size_t>(c) * plane + i];
    n += plane;
  }
  std::array<float, 3> out{0.5f, 0.5f, 0.5f};
  if (n)
    for (int c = 0; c < 3; ++c) out[c] = static_cast<float>(acc[c] / n);
  return out;
}

namespace {

float clamp01(float x) { return x < 0.f ? 0.f : (x > 1.f ? 1.f : x); }

// Smooth per-image texture: coarse noise grid, bilinearly upsampled.
Tensor<float> smooth_noise(int h, int w, std::mt19937& rng) {
  const int gh = std::max(2, h / 8), gw = std::max(2, w / 8);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> grid(static_cast<std::size_t>(gh) * gw);
  for (auto& e : grid) e = u(rng);
  Tensor<float> out({h, w});
  for (int i = 0; i < h; ++i) {
    float fy = static_cast<float>(i) * (gh - 1) / std::max(1, h - 1);
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, gh - 1);
    float wy = fy - y0;
    for (int j = 0; j < w; ++j) {
      float fx = static_cast<float>(j) * (gw - 1) / std::max(1, w - 1);
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, gw - 1);
      float wx = fx - x0;
      out.v[static_cast<std::size_t>(i) * w + j] =
          (1 - wy) * ((1 - wx) * grid[static_cast<std::size_t>(y0) * gw + x0] + wx * grid[static_cast<std::size_t>(y0) * gw + x1]) +
          wy * ((1 - wx) * grid[static_cast<std::size_t>(y1) * gw + x0] + wx * grid[static_cast<std::size_t>(y1) * gw + x1]);
    }
  }
  return out;
}

enum class ShapeKind { Disk, Rect, Triangle, Ring };

bool inside_shape(ShapeKind kind, int i, int j, int ci, int cj, int radius) {
  const int di = i - ci, dj = j - cj;
  switch (kind) {
    case ShapeKind::Disk:
      return di * di + dj * dj <= radius * radius;
    case ShapeKind::Rect:
      return std::abs(di) <= radius && std::abs(dj) <= radius;
    case ShapeKind::Triangle:
      // upward triangle: widens linearly toward the base
      return di >= -radius && di <= radius && std::abs(dj) <= (di + radius) / 2;
    case ShapeKind::Ring: {
      int d2 = di * di + dj * dj;
      int inner = std::max(1, radius / 2);
      return d2 <= radius * radius && d2 >= inner * inner;
    }
  }
  return false;
}

}  // namespace

Dataset generate_synth_dataset(const SynthSpec& spec) {
  spec.validate();
  std::mt19937 rng(spec.seed);
  const int k = spec.num_classes, size = spec.image_size;
  // Shape classes are told apart only by the red channel, and the per-image
  // State b rotates the class-to-red mapping by one step, so every red value
  // is shared by two classes and decoding a shape needs the image state. The
  // cue for b is a faint background tint buried under per-pixel noise: a
  // single pixel is uninformative and the state only becomes readable after
  // averaging over a wide area.
  const float step = 0.4f / std::max(1, k - 1);
  const int frame = 4;

  Dataset ds;
  ds.num_classes = k;
  std::uniform_int_distribution<int> nshape_d(spec.min_shapes, spec.max_shapes);
  std::uniform_int_distribution<int> class_d(1, k - 1);
  std::uniform_int_distribution<int> kind_d(0, 3);
  std::uniform_int_distribution<int> state_d(0, 1);
  const int rad_hi = std::max(5, std::min(std::max(6, size / 5), (size - 14) / 2));
  std::uniform_int_distribution<int> radius_d(5, rad_hi);
  std::uniform_real_distribution<float> noise_d(-1.f, 1.f);

  for (int img = 0; img < spec.num_images; ++img) {
    const int b = state_d(rng);
    SegmentationSample s;
    s.image = Tensor<float>({3, size, size});
    s.labels = Tensor<int32_t>({size, size});
    Tensor<float> tex = smooth_noise(size, size, rng);
    const float bg_g = b ? 0.595f : 0.645f;
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        float n = 0.04f * tex.v[static_cast<std::size_t>(i) * size + j] + 0.15f * noise_d(rng);
        bool on_frame = i < frame || j < frame || i >= size - frame || j >= size - frame;
        s.image.v[(0 * static_cast<std::size_t>(size) + i) * size + j] = clamp01((on_frame ? 0.25f : 0.50f) + n);
        s.image.v[(1 * static_cast<std::size_t>(size) + i) * size + j] = clamp01(bg_g + n);
        s.image.v[(2 * static_cast<std::size_t>(size) + i) * size + j] = clamp01((on_frame ? 0.30f : 0.50f) + n);
      }
    const int nshapes = nshape_d(rng);
    for (int sh = 0; sh < nshapes; ++sh) {
      int cls = class_d(rng);
      ShapeKind kind = static_cast<ShapeKind>(kind_d(rng));
      int radius = radius_d(rng);
      std::uniform_int_distribution<int> center_d(radius + frame + 2, size - 3 - frame - radius);
      int ci = center_d(rng), cj = center_d(rng);
      float red = 0.20f + step * static_cast<float>((cls - 1 + b) % (k - 1));
      for (int i = ci - radius; i <= ci + radius; ++i)
        for (int j = cj - radius; j <= cj + radius; ++j) {
          if (i < 0 || i >= size || j < 0 || j >= size) continue;
          if (!inside_shape(kind, i, j, ci, cj, radius)) continue;
          float n = 0.15f * noise_d(rng);
          s.image.v[(0 * static_cast<std::size_t>(size) + i) * size + j] = clamp01(red + n);
          s.image.v[(1 * static_cast<std::size_t>(size) + i) * size + j] = clamp01(0.35f + n);
          s.image.v[(2 * static_cast<std::size_t>(size) + i) * size + j] = clamp01(0.55f + n);
          s.labels.v[static_cast<std::size_t>(i) * size + j] = cls;
        }
    }
    s.present = compute_present(s.labels, k);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<float> median_frequency_weights(const Dataset& ds, int ignore_index) {
  const int k = ds.num_classes;
  std::vector<double> freq(k, 0);
  double total = 0;
  for (const auto& s : ds.samples)
    for (int32_t l : s.labels.v) {
      if (l == ignore_index) continue;
      freq[l] += 1;
      total += 1;
    }
  std::vector<double> nonzero;
  for (double f : freq)
    if (f > 0) nonzero.push_back(f / total);
  std::vector<float> w(k, 1.f);
  if (nonzero.empty()) return w;
  std::sort(nonzero.begin(), nonzero.end());
  double median = nonzero[nonzero.size() / 2];
  for (int c = 0; c < k; ++c) {
    if (freq[c] == 0) continue;
    double wc = median / (freq[c] / total);
    w[c] = static_cast<float>(std::clamp(wc, 0.1, 10.0));
  }
  return w;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "labels");
  json manifest;
  manifest["num_classes"] = ds.num_classes;
  manifest["items"] = json::array();
  char name[32];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    std::snprintf(name, sizeof(name), "%04zu.png", i);
    const int h = s.height(), w = s.width();
    Tensor<std::uint8_t> img({3, h, w});
    for (std::size_t e = 0; e < s.image.size(); ++e)
      img.v[e] = static_cast<std::uint8_t>(std::clamp(s.image.v[e], 0.f, 1.f) * 255.f + 0.5f);
    Tensor<std::uint8_t> lab({h, w});
    for (std::size_t e = 0; e < s.labels.size(); ++e) lab.v[e] = static_cast<std::uint8_t>(s.labels.v[e]);
    write_rgb_png((fs::path(dir) / "images" / name).string(), img);
    write_gray_png((fs::path(dir) / "labels" / name).string(), lab);
    json item;
    item["image"] = std::string("images/") + name;
    item["labels"] = std::string("labels/") + name;
    item["present"] = s.present;
    manifest["items"].push_back(item);
  }
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("load_dataset: no manifest.json in " + dir);
  json manifest = json::parse(in);
  Dataset ds;
  ds.num_classes = manifest.at("num_classes").get<int>();
  for (const auto& item : manifest.at("items")) {
    SegmentationSample s;
    auto img = read_rgb_png((fs::path(dir) / item.at("image").get<std::string>()).string());
    auto lab = read_gray_png((fs::path(dir) / item.at("labels").get<std::string>()).string());
    s.image = Tensor<float>(img.shape);
    for (std::size_t e = 0; e < img.size(); ++e) s.image.v[e] = img.v[e] / 255.f;
    s.labels = Tensor<int32_t>(lab.shape);
    for (std::size_t e = 0; e < lab.size(); ++e) s.labels.v[e] = lab.v[e];
    s.present = item.at("present").get<std::vector<std::uint8_t>>();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace dca
