/* Copyright 2026 The maskscore Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "maskscore/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace maskscore::nn {

namespace {

constexpr int kKernel = 3;
constexpr int kPad = 1;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  require(t.rank() == rank, std::string(what) + ": expected rank " +
                                std::to_string(rank) + ", got " +
                                t.shape_string());
}

// Output columns [lo, hi) whose input column o*stride + k - pad is in range.
std::pair<int, int> valid_range(int k, int stride, int in_side, int out_side) {
  int lo = 0;
  while (lo < out_side && lo * stride + k - kPad < 0) ++lo;
  int hi = out_side;
  while (hi > lo && (hi - 1) * stride + k - kPad >= in_side) --hi;
  return {lo, hi};
}

void check_conv_shapes(const Tensor& input, const Tensor& weight, int stride) {
  require_rank(input, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");
  require(weight.dim(1) == input.dim(0),
          "conv2d: weight expects " + std::to_string(weight.dim(1)) +
              " input channels, input has " + std::to_string(input.dim(0)));
  require(weight.dim(2) == kKernel && weight.dim(3) == kKernel,
          "conv2d: kernel must be 3x3");
}

}  // namespace

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_string());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ',';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Param::Param(std::string n, std::vector<int> shape)
    : name(std::move(n)), value(shape), grad(shape), velocity(shape) {}

void kaiming_init(Param& weight, Param& bias, int fan_in,
                  std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (auto& w : weight.value.data()) w = dist(rng);
  bias.value.fill(0.0);
  weight.velocity.fill(0.0);
  bias.velocity.fill(0.0);
}

int conv_output_side(int side, int stride) {
  return (side + 2 * kPad - kKernel) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride) {
  check_conv_shapes(input, weight, stride);
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = weight.dim(0);
  require(bias.size() == static_cast<std::size_t>(cout),
          "conv2d: bias length mismatch");
  const int oh = conv_output_side(h, stride);
  const int ow = conv_output_side(w, stride);
  Tensor out({cout, oh, ow});
  const double* in = input.data().data();
  const double* wt = weight.data().data();
  double* o = out.data().data();
  for (int co = 0; co < cout; ++co) {
    double* oplane = o + static_cast<std::size_t>(co) * oh * ow;
    std::fill(oplane, oplane + oh * ow, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
      const double* k = wt + (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < kKernel; ++ky) {
        const auto [ylo, yhi] = valid_range(ky, stride, h, oh);
        for (int kx = 0; kx < kKernel; ++kx) {
          const auto [xlo, xhi] = valid_range(kx, stride, w, ow);
          const double kv = k[ky * kKernel + kx];
          for (int oy = ylo; oy < yhi; ++oy) {
            const double* irow = iplane + (oy * stride + ky - kPad) * w;
            double* orow = oplane + oy * ow;
            for (int ox = xlo; ox < xhi; ++ox) {
              orow[ox] += kv * irow[ox * stride + kx - kPad];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_backward(const Tensor& input, const Tensor& weight, int stride,
                       const Tensor& grad_output, Tensor& grad_weight,
                       Tensor& grad_bias) {
  check_conv_shapes(input, weight, stride);
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = weight.dim(0);
  const int oh = conv_output_side(h, stride);
  const int ow = conv_output_side(w, stride);
  require(grad_output.shape() == std::vector<int>{cout, oh, ow},
          "conv2d_backward: grad_output shape mismatch");
  require(grad_weight.shape() == weight.shape(),
          "conv2d_backward: grad_weight shape mismatch");
  Tensor grad_input(input.shape());
  const double* in = input.data().data();
  const double* wt = weight.data().data();
  const double* go = grad_output.data().data();
  double* gi = grad_input.data().data();
  double* gw = grad_weight.data().data();
  for (int co = 0; co < cout; ++co) {
    const double* gplane = go + static_cast<std::size_t>(co) * oh * ow;
    double bsum = 0.0;
    for (int i = 0; i < oh * ow; ++i) bsum += gplane[i];
    grad_bias[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const double* iplane = in + static_cast<std::size_t>(ci) * h * w;
      double* giplane = gi + static_cast<std::size_t>(ci) * h * w;
      const std::size_t koff = (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < kKernel; ++ky) {
        const auto [ylo, yhi] = valid_range(ky, stride, h, oh);
        for (int kx = 0; kx < kKernel; ++kx) {
          const auto [xlo, xhi] = valid_range(kx, stride, w, ow);
          const double kv = wt[koff + ky * kKernel + kx];
          double acc = 0.0;
          for (int oy = ylo; oy < yhi; ++oy) {
            const std::size_t irow = (oy * stride + ky - kPad) * w;
            const double* grow = gplane + oy * ow;
            for (int ox = xlo; ox < xhi; ++ox) {
              const std::size_t ix = irow + ox * stride + kx - kPad;
              acc += grow[ox] * iplane[ix];
              giplane[ix] += kv * grow[ox];
            }
          }
          gw[koff + ky * kKernel + kx] += acc;
        }
      }
    }
  }
  return grad_input;
}

Tensor max_pool_2x2(const Tensor& input) {
  require_rank(input, 3, "max_pool_2x2 input");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  require(h % 2 == 0 && w % 2 == 0,
          "max_pool_2x2: spatial size must be even, got " +
              input.shape_string());
  Tensor out({c, h / 2, w / 2});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        out.at(ch, y, x) = std::max(
            std::max(input.at(ch, 2 * y, 2 * x), input.at(ch, 2 * y, 2 * x + 1)),
            std::max(input.at(ch, 2 * y + 1, 2 * x),
                     input.at(ch, 2 * y + 1, 2 * x + 1)));
      }
    }
  }
  return out;
}

Tensor max_pool_2x2_backward(const Tensor& input, const Tensor& grad_output) {
  require_rank(input, 3, "max_pool_2x2_backward input");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  require(grad_output.shape() == std::vector<int>{c, h / 2, w / 2},
          "max_pool_2x2_backward: grad_output shape mismatch");
  Tensor grad_input(input.shape());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < w / 2; ++x) {
        // First maximum in raster order receives the gradient.
        int by = 2 * y, bx = 2 * x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            if (input.at(ch, 2 * y + dy, 2 * x + dx) > input.at(ch, by, bx)) {
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        grad_input.at(ch, by, bx) += grad_output.at(ch, y, x);
      }
    }
  }
  return grad_input;
}

Tensor fully_connected(const Tensor& input, const Tensor& weight,
                       const Tensor& bias) {
  require_rank(weight, 2, "fully_connected weight");
  const int m = weight.dim(0), n = weight.dim(1);
  require(input.size() == static_cast<std::size_t>(n),
          "fully_connected: input length " + std::to_string(input.size()) +
              " does not match weight columns " + std::to_string(n));
  require(bias.size() == static_cast<std::size_t>(m),
          "fully_connected: bias length mismatch");
  Tensor out({m});
  const double* x = input.data().data();
  for (int i = 0; i < m; ++i) {
    const double* row = weight.data().data() + static_cast<std::size_t>(i) * n;
    double acc = bias[i];
    for (int j = 0; j < n; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

Tensor fully_connected_backward(const Tensor& input, const Tensor& weight,
                                const Tensor& grad_output,
                                Tensor& grad_weight, Tensor& grad_bias) {
  require_rank(weight, 2, "fully_connected weight");
  const int m = weight.dim(0), n = weight.dim(1);
  require(grad_output.size() == static_cast<std::size_t>(m),
          "fully_connected_backward: grad_output length mismatch");
  Tensor grad_input(input.shape());
  const double* x = input.data().data();
  double* gx = grad_input.data().data();
  for (int i = 0; i < m; ++i) {
    const double g = grad_output[i];
    grad_bias[i] += g;
    const double* row = weight.data().data() + static_cast<std::size_t>(i) * n;
    double* grow = grad_weight.data().data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      grow[j] += g * x[j];
      gx[j] += g * row[j];
    }
  }
  return grad_input;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = relu(v);
  return out;
}

Tensor relu_backward(const Tensor& output, const Tensor& grad_output) {
  require(output.size() == grad_output.size(),
          "relu_backward: size mismatch");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (output[i] <= 0.0) g[i] = 0.0;
  }
  return g;
}

LossResult l2_loss(std::span<const double> pred, std::span<const double> target,
                   std::span<const std::uint8_t> supervision) {
  require(pred.size() == target.size() && pred.size() == supervision.size(),
          "l2_loss: length mismatch");
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  const auto n = std::count_if(supervision.begin(), supervision.end(),
                               [](std::uint8_t s) { return s != 0; });
  if (n == 0) return r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!supervision[i]) continue;
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / static_cast<double>(n);
  }
  r.loss /= static_cast<double>(n);
  return r;
}

void sgd_momentum_step(std::span<Param* const> params, double lr,
                       double momentum) {
  for (Param* p : params) {
    auto& v = p->velocity.data();
    auto& g = p->grad.data();
    auto& w = p->value.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      w[i] -= lr * v[i];
    }
  }
}

GradCheckResult grad_check(std::span<Param* const> params,
                           const std::function<double(bool)>& loss_fn,
                           double epsilon, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("grad_check: stride must be positive");
  loss_fn(true);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  std::size_t flat = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k]->value.data();
    for (std::size_t i = 0; i < w.size(); ++i, ++flat) {
      if (flat % stride != 0) continue;
      const double saved = w[i];
      w[i] = saved + epsilon;
      const double lp = loss_fn(false);
      w[i] = saved - epsilon;
      const double lm = loss_fn(false);
      w[i] = saved;
      const double numeric = (lp - lm) / (2.0 * epsilon);
      const double a = analytic[k][i];
      const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-6);
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = params[k]->name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

nlohmann::json params_to_json(std::span<const Param* const> params) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Param* p : params) {
    layers.push_back({{"name", p->name},
                      {"shape", p->value.shape()},
                      {"data", p->value.data()}});
  }
  return layers;
}

void params_from_json(const nlohmann::json& j,
                      std::span<Param* const> params) {
  if (!j.is_array() || j.size() != params.size()) {
    throw std::runtime_error("checkpoint: expected " +
                             std::to_string(params.size()) +
                             " parameter tensors");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = j[k];
    Param& p = *params[k];
    if (e.at("name").get<std::string>() != p.name) {
      throw std::runtime_error("checkpoint: parameter " + std::to_string(k) +
                               " is '" + e.at("name").get<std::string>() +
                               "', expected '" + p.name + "'");
    }
    Tensor t(e.at("shape").get<std::vector<int>>(),
             e.at("data").get<std::vector<double>>());
    if (t.shape() != p.value.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name +
                               ": " + t.shape_string() + " vs " +
                               p.value.shape_string());
    }
    p.value = std::move(t);
    p.grad.fill(0.0);
    p.velocity.fill(0.0);
  }
}

}  // namespace maskscore::nn
