#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dca/ops.hpp"

namespace dca {

// Named model state: trainable parameters plus persistent buffers
// (batch-norm running statistics). Collection order is deterministic and
// defines the checkpoint layout.
template <typename T>
struct StateDict {
  std::vector<std::pair<std::string, Var<T>>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  void add_param(const std::string& name, const Var<T>& v) { params.emplace_back(name, v); }
  void add_buffer(const std::string& name, Tensor<T>* t) { buffers.emplace_back(name, t); }
};

template <typename T>
Var<T> he_normal_param(std::vector<int> shape, int fan_in, std::mt19937& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (T& e : t.v) e = static_cast<T>(dist(rng));
  return make_var(std::move(t), true);
}

template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_c, int out_c, int k, int stride, int pad, int dil, std::mt19937& rng)
      : stride_(stride), pad_(pad), dil_(dil) {
    weight = he_normal_param<T>({out_c, in_c, k, k}, in_c * k * k, rng);
    bias = make_var(Tensor<T>({out_c}), true);
  }

  Var<T> forward(const Var<T>& x) const { return conv2d(x, weight, bias, stride_, pad_, dil_); }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    sd.add_param(prefix + ".weight", weight);
    sd.add_param(prefix + ".bias", bias);
  }

  Var<T> weight, bias;

 private:
  int stride_ = 1, pad_ = 0, dil_ = 1;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels) : running_mean({channels}), running_var({channels}, T(1)) {
    gamma = make_var(Tensor<T>({channels}, T(1)), true);
    beta = make_var(Tensor<T>({channels}), true);
  }

  Var<T> forward(const Var<T>& x, bool training) {
    check_rank4(x->value, "batch_norm");
    const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
    if (c != static_cast<int>(running_mean.size()))
      throw std::invalid_argument("batch_norm: channel mismatch, got " + std::to_string(c));
    const std::size_t cnt = static_cast<std::size_t>(n) * h * w;

    Tensor<T> mean({c}), invstd({c});
    if (training) {
      Tensor<T> var({c});
      for (int ch = 0; ch < c; ++ch) {
        double s = 0;
        for (int b = 0; b < n; ++b)
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) s += x->value.at(b, ch, i, j);
        double m = s / cnt;
        double s2 = 0;
        for (int b = 0; b < n; ++b)
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
              double d = x->value.at(b, ch, i, j) - m;
              s2 += d * d;
            }
        mean.v[ch] = static_cast<T>(m);
        var.v[ch] = static_cast<T>(s2 / cnt);
        invstd.v[ch] = static_cast<T>(1.0 / std::sqrt(s2 / cnt + eps));
        double unbiased = cnt > 1 ? s2 / (cnt - 1) : 0.0;
        running_mean.v[ch] = static_cast<T>((1 - momentum) * running_mean.v[ch] + momentum * m);
        running_var.v[ch] = static_cast<T>((1 - momentum) * running_var.v[ch] + momentum * unbiased);
      }
    } else {
      for (int ch = 0; ch < c; ++ch) {
        mean.v[ch] = running_mean.v[ch];
        invstd.v[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.v[ch]) + eps));
      }
    }

    Tensor<T> xhat({n, c, h, w});
    Tensor<T> y({n, c, h, w});
    for (int b = 0; b < n; ++b)
      for (int ch = 0; ch < c; ++ch) {
        T m = mean.v[ch], is = invstd.v[ch], g = gamma->value.v[ch], be = beta->value.v[ch];
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            T xh = (x->value.at(b, ch, i, j) - m) * is;
            xhat.at(b, ch, i, j) = xh;
            y.at(b, ch, i, j) = g * xh + be;
          }
      }

    auto xhat_p = std::make_shared<Tensor<T>>(std::move(xhat));
    auto out = make_op(std::move(y), {x, gamma, beta});
    if (out->requires_grad)
      out->backprop = [o = out.get(), px = x.get(), pg = gamma.get(), pb = beta.get(), xhat_p, invstd, training, n, c,
                       h, w, cnt]() {
        // per-channel reductions of dy and dy*xhat
        std::vector<double> sum_dy(c, 0), sum_dyx(c, 0);
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < w; ++j) {
                double dy = o->grad.at(b, ch, i, j);
                sum_dy[ch] += dy;
                sum_dyx[ch] += dy * xhat_p->at(b, ch, i, j);
              }
        if (pg->requires_grad)
          for (int ch = 0; ch < c; ++ch) pg->ensure_grad().v[ch] += static_cast<T>(sum_dyx[ch]);
        if (pb->requires_grad)
          for (int ch = 0; ch < c; ++ch) pb->ensure_grad().v[ch] += static_cast<T>(sum_dy[ch]);
        if (px->requires_grad) {
          auto& gx = px->ensure_grad();
          for (int b = 0; b < n; ++b)
            for (int ch = 0; ch < c; ++ch) {
              T g = pg->value.v[ch], is = invstd.v[ch];
              T mdy = static_cast<T>(sum_dy[ch] / cnt), mdyx = static_cast<T>(sum_dyx[ch] / cnt);
              for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                  T dy = o->grad.at(b, ch, i, j);
                  if (training)
                    gx.at(b, ch, i, j) += g * is * (dy - mdy - xhat_p->at(b, ch, i, j) * mdyx);
                  else
                    gx.at(b, ch, i, j) += g * is * dy;
                }
            }
        }
      };
    return out;
  }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    sd.add_param(prefix + ".gamma", gamma);
    sd.add_param(prefix + ".beta", beta);
    sd.add_buffer(prefix + ".running_mean", &running_mean);
    sd.add_buffer(prefix + ".running_var", &running_var);
  }

  Var<T> gamma, beta;
  Tensor<T> running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(int in_f, int out_f, std::mt19937& rng) {
    weight = he_normal_param<T>({out_f, in_f}, in_f, rng);
    bias = make_var(Tensor<T>({out_f}), true);
  }

  Var<T> forward(const Var<T>& x) const { return linear(x, weight, bias); }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    sd.add_param(prefix + ".weight", weight);
    sd.add_param(prefix + ".bias", bias);
  }

  Var<T> weight, bias;
};

// conv + batch norm + relu, the standard block in this network
template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(int in_c, int out_c, int k, int stride, int pad, int dil, std::mt19937& rng)
      : conv(in_c, out_c, k, stride, pad, dil, rng), bn(out_c) {}

  Var<T> forward(const Var<T>& x, bool training) { return relu(bn.forward(conv.forward(x), training)); }

  void collect(const std::string& prefix, StateDict<T>& sd) {
    conv.collect(prefix + ".conv", sd);
    bn.collect(prefix + ".bn", sd);
  }

  Conv2d<T> conv;
  BatchNorm2d<T> bn;
};

}  // namespace dca
