#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "dca/tensor.hpp"

namespace dca {

// Independent brute-force references for the DCA arithmetic. These share no
// implementation code with the ops they check: everything is a plain loop
// over Tensor values.

// Bin-average context pooling by explicit enumeration. Bin boundaries use
// the floor rule lo = floor(i*extent/r), hi = floor((i+1)*extent/r), widened
// to at least one cell when r exceeds the extent.
template <typename T>
Tensor<T> oracle_context_pool(const Tensor<T>& f, int r) {
  if (f.rank() != 4) throw std::invalid_argument("oracle_context_pool: rank-4 input required");
  if (r < 1) throw std::invalid_argument("oracle_context_pool: r must be >= 1");
  const int n = f.dim(0), c = f.dim(1), h = f.dim(2), w = f.dim(3);
  Tensor<T> out({n, c, r, r});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          long long rlo = (static_cast<long long>(i) * h) / r;
          long long rhi = (static_cast<long long>(i + 1) * h) / r;
          long long clo = (static_cast<long long>(j) * w) / r;
          long long chi = (static_cast<long long>(j + 1) * w) / r;
          if (rlo > h - 1) rlo = h - 1;
          if (rhi <= rlo) rhi = rlo + 1;
          if (clo > w - 1) clo = w - 1;
          if (chi <= clo) chi = clo + 1;
          double s = 0;
          long long cnt = 0;
          for (long long p = rlo; p < rhi; ++p)
            for (long long q = clo; q < chi; ++q) {
              s += f.at(b, ch, static_cast<int>(p), static_cast<int>(q));
              ++cnt;
            }
          out.at(b, ch, i, j) = static_cast<T>(s / cnt);
        }
  return out;
}

// Per-element spatial update: mask * transformed + residual.
template <typename T>
Tensor<T> oracle_dca_update(const Tensor<T>& fs, const Tensor<T>& mask, const Tensor<T>& fs_t) {
  if (!fs.same_shape(mask) || !fs.same_shape(fs_t))
    throw std::invalid_argument("oracle_dca_update: shape mismatch");
  const int n = fs.dim(0), c = fs.dim(1), h = fs.dim(2), w = fs.dim(3);
  Tensor<T> out(fs.shape);
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          out.at(b, ch, i, j) = mask.at(b, ch, i, j) * fs_t.at(b, ch, i, j) + fs.at(b, ch, i, j);
  return out;
}

// ---------------------------------------------------------------------------
// central-difference gradient checker

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_coord;
  bool pass = false;
  std::size_t coords_checked = 0;
};

// One coordinate to probe: a mutable value slot plus its analytic gradient.
template <typename T>
struct GradCoord {
  std::string name;
  T* value;
  T analytic;
};

// f is re-evaluated with each coordinate perturbed by +/- epsilon. The
// relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
template <typename T>
GradCheckReport grad_check(const std::function<T()>& f, std::vector<GradCoord<T>>& coords, double epsilon = 1e-5,
                           double tolerance = 1e-4, double scale_floor = 1e-3) {
  GradCheckReport rep;
  for (auto& c : coords) {
    T saved = *c.value;
    *c.value = saved + static_cast<T>(epsilon);
    double fp = static_cast<double>(f());
    *c.value = saved - static_cast<T>(epsilon);
    double fm = static_cast<double>(f());
    *c.value = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("grad_check: non-finite function value at probe " + c.name);
    double numeric = (fp - fm) / (2 * epsilon);
    double analytic = static_cast<double>(c.analytic);
    double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), scale_floor});
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_coord = c.name;
    }
    ++rep.coords_checked;
  }
  rep.pass = rep.max_rel_error <= tolerance;
  return rep;
}

}  // namespace dca
