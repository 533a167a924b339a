#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "dca/autograd.hpp"

namespace dca {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using CMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> y = x->value;
  for (T& e : y.v) e = e > T(0) ? e : T(0);
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get()]() {
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (p->value.v[i] > T(0)) g.v[i] += o->grad.v[i];
    };
  return out;
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> y = x->value;
  for (T& e : y.v) e = T(1) / (T(1) + std::exp(-e));
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get()]() {
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        T s = o->value.v[i];
        g.v[i] += o->grad.v[i] * s * (T(1) - s);
      }
    };
  return out;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_shape(b->value))
    throw std::invalid_argument("add: shape mismatch " + shape_str(a->value.shape) + " vs " + shape_str(b->value.shape));
  Tensor<T> y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += b->value.v[i];
  auto out = make_op(std::move(y), {a, b});
  if (out->requires_grad)
    out->backprop = [o = out.get(), pa = a.get(), pb = b.get()]() {
      if (pa->requires_grad) {
        auto& g = pa->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i];
      }
      if (pb->requires_grad) {
        auto& g = pb->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i];
      }
    };
  return out;
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_shape(b->value))
    throw std::invalid_argument("mul: shape mismatch " + shape_str(a->value.shape) + " vs " + shape_str(b->value.shape));
  Tensor<T> y = a->value;
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] *= b->value.v[i];
  auto out = make_op(std::move(y), {a, b});
  if (out->requires_grad)
    out->backprop = [o = out.get(), pa = a.get(), pb = b.get()]() {
      if (pa->requires_grad) {
        auto& g = pa->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i] * pb->value.v[i];
      }
      if (pb->requires_grad) {
        auto& g = pb->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i] * pa->value.v[i];
      }
    };
  return out;
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  Tensor<T> y = x->value;
  for (T& e : y.v) e *= c;
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get(), c]() {
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i] * c;
    };
  return out;
}

template <typename T>
Var<T> sum_all(const Var<T>& x) {
  T s = 0;
  for (T e : x->value.v) s += e;
  Tensor<T> y({1});
  y.v[0] = s;
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get()]() {
      auto& g = p->ensure_grad();
      T go = o->grad.v[0];
      for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += go;
    };
  return out;
}

// Copying reshape; numel must match.
template <typename T>
Var<T> reshape(const Var<T>& x, std::vector<int> shape) {
  if (Tensor<T>::numel(shape) != x->value.size())
    throw std::invalid_argument("reshape: numel mismatch");
  Tensor<T> y(std::move(shape));
  y.v = x->value.v;
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get()]() {
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += o->grad.v[i];
    };
  return out;
}

// ---------------------------------------------------------------------------
// channel concatenation / slicing

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_channels: empty input list");
  for (const auto& x : xs) check_rank4(x->value, "concat_channels");
  int n = xs[0]->value.dim(0), h = xs[0]->value.dim(2), w = xs[0]->value.dim(3);
  int ctot = 0;
  for (const auto& x : xs) {
    if (x->value.dim(0) != n || x->value.dim(2) != h || x->value.dim(3) != w)
      throw std::invalid_argument("concat_channels: spatial/batch mismatch " + shape_str(x->value.shape));
    ctot += x->value.dim(1);
  }
  Tensor<T> y({n, ctot, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int b = 0; b < n; ++b) {
    std::size_t off = static_cast<std::size_t>(b) * ctot * plane;
    for (const auto& x : xs) {
      std::size_t len = static_cast<std::size_t>(x->value.dim(1)) * plane;
      std::copy_n(x->value.data() + static_cast<std::size_t>(b) * len, len, y.data() + off);
      off += len;
    }
  }
  auto out = make_op(std::move(y), xs);
  if (out->requires_grad)
    out->backprop = [o = out.get(), n, ctot, plane]() {
      for (int b = 0; b < n; ++b) {
        std::size_t off = static_cast<std::size_t>(b) * ctot * plane;
        for (auto& pv : o->parents) {
          Node<T>* p = pv.get();
          std::size_t len = static_cast<std::size_t>(p->value.dim(1)) * plane;
          if (p->requires_grad) {
            auto& g = p->ensure_grad();
            T* dst = g.data() + static_cast<std::size_t>(b) * len;
            const T* src = o->grad.data() + off;
            for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
          }
          off += len;
        }
      }
    };
  return out;
}

// ---------------------------------------------------------------------------
// adaptive average pooling (context pooling)

struct PoolBins {
  std::vector<int> lo, hi;  // half-open ranges per output index
};

// Floor-boundary adaptive bins; bins never empty even when r > extent.
inline PoolBins adaptive_bins(int extent, int r) {
  PoolBins b;
  b.lo.resize(r);
  b.hi.resize(r);
  for (int i = 0; i < r; ++i) {
    int lo = static_cast<int>((static_cast<long long>(i) * extent) / r);
    int hi = static_cast<int>((static_cast<long long>(i + 1) * extent) / r);
    if (lo > extent - 1) lo = extent - 1;
    if (hi <= lo) hi = lo + 1;
    if (hi > extent) hi = extent;
    b.lo[i] = lo;
    b.hi[i] = hi;
  }
  return b;
}

template <typename T>
Var<T> adaptive_avg_pool(const Var<T>& x, int r) {
  check_rank4(x->value, "adaptive_avg_pool");
  if (r < 1) throw std::invalid_argument("adaptive_avg_pool: r must be >= 1, got " + std::to_string(r));
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  PoolBins bh = adaptive_bins(h, r), bw = adaptive_bins(w, r);
  Tensor<T> y({n, c, r, r});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          double s = 0;
          for (int p = bh.lo[i]; p < bh.hi[i]; ++p)
            for (int q = bw.lo[j]; q < bw.hi[j]; ++q) s += x->value.at(b, ch, p, q);
          y.at(b, ch, i, j) = static_cast<T>(s / ((bh.hi[i] - bh.lo[i]) * (bw.hi[j] - bw.lo[j])));
        }
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get(), bh, bw, n, c, r]() {
      auto& g = p->ensure_grad();
      for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
              T go = o->grad.at(b, ch, i, j) / static_cast<T>((bh.hi[i] - bh.lo[i]) * (bw.hi[j] - bw.lo[j]));
              for (int pp = bh.lo[i]; pp < bh.hi[i]; ++pp)
                for (int q = bw.lo[j]; q < bw.hi[j]; ++q) g.at(b, ch, pp, q) += go;
            }
    };
  return out;
}

// ---------------------------------------------------------------------------
// bilinear resize (half-pixel centers, no corner alignment)

template <typename T>
Var<T> bilinear_resize(const Var<T>& x, int oh, int ow) {
  check_rank4(x->value, "bilinear_resize");
  if (oh < 1 || ow < 1) throw std::invalid_argument("bilinear_resize: target dims must be >= 1");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (oh == h && ow == w) return x;  // exact pass-through
  struct Lerp {
    std::vector<int> i0, i1;
    std::vector<T> w1;  // weight of i1; weight of i0 = 1 - w1
  };
  auto make_lerp = [](int in, int outn) {
    Lerp l;
    l.i0.resize(outn);
    l.i1.resize(outn);
    l.w1.resize(outn);
    for (int o = 0; o < outn; ++o) {
      double src = (o + 0.5) * static_cast<double>(in) / outn - 0.5;
      if (src < 0) src = 0;
      if (src > in - 1) src = in - 1;
      int i0 = static_cast<int>(std::floor(src));
      int i1 = std::min(i0 + 1, in - 1);
      l.i0[o] = i0;
      l.i1[o] = i1;
      l.w1[o] = static_cast<T>(src - i0);
    }
    return l;
  };
  Lerp ly = make_lerp(h, oh), lx = make_lerp(w, ow);
  Tensor<T> y({n, c, oh, ow});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < oh; ++i) {
        T wy1 = ly.w1[i], wy0 = T(1) - wy1;
        for (int j = 0; j < ow; ++j) {
          T wx1 = lx.w1[j], wx0 = T(1) - wx1;
          y.at(b, ch, i, j) = wy0 * (wx0 * x->value.at(b, ch, ly.i0[i], lx.i0[j]) + wx1 * x->value.at(b, ch, ly.i0[i], lx.i1[j])) +
                              wy1 * (wx0 * x->value.at(b, ch, ly.i1[i], lx.i0[j]) + wx1 * x->value.at(b, ch, ly.i1[i], lx.i1[j]));
        }
      }
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get(), ly, lx, n, c, oh, ow]() {
      auto& g = p->ensure_grad();
      for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < oh; ++i) {
            T wy1 = ly.w1[i], wy0 = T(1) - wy1;
            for (int j = 0; j < ow; ++j) {
              T wx1 = lx.w1[j], wx0 = T(1) - wx1;
              T go = o->grad.at(b, ch, i, j);
              g.at(b, ch, ly.i0[i], lx.i0[j]) += go * wy0 * wx0;
              g.at(b, ch, ly.i0[i], lx.i1[j]) += go * wy0 * wx1;
              g.at(b, ch, ly.i1[i], lx.i0[j]) += go * wy1 * wx0;
              g.at(b, ch, ly.i1[i], lx.i1[j]) += go * wy1 * wx1;
            }
          }
    };
  return out;
}

// ---------------------------------------------------------------------------
// convolution (im2col + GEMM)

inline int conv_out_dim(int in, int k, int stride, int pad, int dil) {
  return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

template <typename T>
void im2col(const T* img, int c, int h, int w, int kh, int kw, int stride, int pad, int dil, int oh, int ow, T* col) {
  // col layout: [c*kh*kw, oh*ow]
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < kh; ++ki)
      for (int kj = 0; kj < kw; ++kj) {
        T* dst = col + static_cast<std::size_t>((ch * kh + ki) * kw + kj) * oh * ow;
        for (int i = 0; i < oh; ++i) {
          int src_i = i * stride - pad + ki * dil;
          if (src_i < 0 || src_i >= h) {
            std::fill_n(dst + static_cast<std::size_t>(i) * ow, ow, T(0));
            continue;
          }
          const T* row = img + (static_cast<std::size_t>(ch) * h + src_i) * w;
          for (int j = 0; j < ow; ++j) {
            int src_j = j * stride - pad + kj * dil;
            dst[static_cast<std::size_t>(i) * ow + j] = (src_j >= 0 && src_j < w) ? row[src_j] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, int c, int h, int w, int kh, int kw, int stride, int pad, int dil, int oh, int ow, T* img) {
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < kh; ++ki)
      for (int kj = 0; kj < kw; ++kj) {
        const T* src = col + static_cast<std::size_t>((ch * kh + ki) * kw + kj) * oh * ow;
        for (int i = 0; i < oh; ++i) {
          int dst_i = i * stride - pad + ki * dil;
          if (dst_i < 0 || dst_i >= h) continue;
          T* row = img + (static_cast<std::size_t>(ch) * h + dst_i) * w;
          for (int j = 0; j < ow; ++j) {
            int dst_j = j * stride - pad + kj * dil;
            if (dst_j >= 0 && dst_j < w) row[dst_j] += src[static_cast<std::size_t>(i) * ow + j];
          }
        }
      }
}

// weight: [out_c, in_c, kh, kw]; bias: [out_c]
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad, int dil) {
  check_rank4(x->value, "conv2d input");
  check_rank4(weight->value, "conv2d weight");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  const int oc = weight->value.dim(0), kc = weight->value.dim(1), kh = weight->value.dim(2), kw = weight->value.dim(3);
  if (kc != c)
    throw std::invalid_argument("conv2d: input has " + std::to_string(c) + " channels, weight expects " + std::to_string(kc));
  const int oh = conv_out_dim(h, kh, stride, pad, dil), ow = conv_out_dim(w, kw, stride, pad, dil);
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: output would be empty");
  const int kdim = c * kh * kw, hw = oh * ow;

  auto cols = std::make_shared<std::vector<Tensor<T>>>();  // cached for backward
  cols->reserve(n);
  Tensor<T> y({n, oc, oh, ow});
  CMatMap<T> wm(weight->value.data(), oc, kdim);
  for (int b = 0; b < n; ++b) {
    Tensor<T> col({kdim, hw});
    im2col(x->value.data() + static_cast<std::size_t>(b) * c * h * w, c, h, w, kh, kw, stride, pad, dil, oh, ow, col.data());
    MatMap<T> ym(y.data() + static_cast<std::size_t>(b) * oc * hw, oc, hw);
    CMatMap<T> cm(col.data(), kdim, hw);
    ym.noalias() = wm * cm;
    for (int o = 0; o < oc; ++o) ym.row(o).array() += bias->value.v[o];
    cols->push_back(std::move(col));
  }
  auto out = make_op(std::move(y), {x, weight, bias});
  if (out->requires_grad)
    out->backprop = [o = out.get(), px = x.get(), pw = weight.get(), pb = bias.get(), cols, n, c, h, w, oc, kh, kw,
                     stride, pad, dil, oh, ow, kdim, hw]() {
      CMatMap<T> wm(pw->value.data(), oc, kdim);
      Tensor<T> dcol({kdim, hw});
      for (int b = 0; b < n; ++b) {
        CMatMap<T> dym(o->grad.data() + static_cast<std::size_t>(b) * oc * hw, oc, hw);
        if (pw->requires_grad) {
          MatMap<T> dwm(pw->ensure_grad().data(), oc, kdim);
          CMatMap<T> cm((*cols)[b].data(), kdim, hw);
          dwm.noalias() += dym * cm.transpose();
        }
        if (pb->requires_grad) {
          auto& gb = pb->ensure_grad();
          // plain loop: Eigen's vectorized sum() peels to an aligned address,
          // which makes the summation order (and rounding) depend on where
          // the buffer was allocated; training must be bit-reproducible
          for (int oc_i = 0; oc_i < oc; ++oc_i) {
            T s = T(0);
            const T* row = o->grad.data() + (static_cast<std::size_t>(b) * oc + oc_i) * hw;
            for (int i = 0; i < hw; ++i) s += row[i];
            gb.v[oc_i] += s;
          }
        }
        if (px->requires_grad) {
          MatMap<T> dcm(dcol.data(), kdim, hw);
          dcm.noalias() = wm.transpose() * dym;
          col2im_add(dcol.data(), c, h, w, kh, kw, stride, pad, dil, oh, ow,
                     px->ensure_grad().data() + static_cast<std::size_t>(b) * c * h * w);
        }
      }
    };
  return out;
}

// ---------------------------------------------------------------------------
// linear: x [n, f] * weight [out, f]^T + bias [out]

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  if (x->value.rank() != 2 || weight->value.rank() != 2)
    throw std::invalid_argument("linear: expected rank-2 input and weight");
  const int n = x->value.dim(0), f = x->value.dim(1), o = weight->value.dim(0);
  if (weight->value.dim(1) != f) throw std::invalid_argument("linear: feature dim mismatch");
  Tensor<T> y({n, o});
  CMatMap<T> xm(x->value.data(), n, f), wm(weight->value.data(), o, f);
  MatMap<T> ym(y.data(), n, o);
  ym.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < o; ++j) ym(i, j) += bias->value.v[j];
  auto out = make_op(std::move(y), {x, weight, bias});
  if (out->requires_grad)
    out->backprop = [op = out.get(), px = x.get(), pw = weight.get(), pb = bias.get(), n, f, o]() {
      CMatMap<T> dym(op->grad.data(), n, o);
      CMatMap<T> xm(px->value.data(), n, f), wm(pw->value.data(), o, f);
      if (pw->requires_grad) {
        MatMap<T> dwm(pw->ensure_grad().data(), o, f);
        dwm.noalias() += dym.transpose() * xm;
      }
      if (pb->requires_grad) {
        auto& gb = pb->ensure_grad();
        for (int j = 0; j < o; ++j) {
          T s = T(0);
          for (int i = 0; i < n; ++i) s += dym(i, j);
          gb.v[j] += s;
        }
      }
      if (px->requires_grad) {
        MatMap<T> dxm(px->ensure_grad().data(), n, f);
        dxm.noalias() += dym * wm;
      }
    };
  return out;
}

// Top-left spatial crop to (oh, ow).
template <typename T>
Var<T> crop_spatial(const Var<T>& x, int oh, int ow) {
  check_rank4(x->value, "crop_spatial");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (oh > h || ow > w) throw std::invalid_argument("crop_spatial: crop larger than input");
  if (oh == h && ow == w) return x;
  Tensor<T> y({n, c, oh, ow});
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) y.at(b, ch, i, j) = x->value.at(b, ch, i, j);
  auto out = make_op(std::move(y), {x});
  if (out->requires_grad)
    out->backprop = [o = out.get(), p = x.get(), n, c, oh, ow]() {
      auto& g = p->ensure_grad();
      for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) g.at(b, ch, i, j) += o->grad.at(b, ch, i, j);
    };
  return out;
}

// Global average pool to [n, c].
template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  check_rank4(x->value, "global_avg_pool");
  const int n = x->value.dim(0), c = x->value.dim(1);
  return reshape(adaptive_avg_pool(x, 1), {n, c});
}

}  // namespace dca
