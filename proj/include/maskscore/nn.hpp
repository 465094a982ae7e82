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
// Dense double-precision layers with hand-written backward passes. Only what
// the MaskIoU regressor needs: 3x3 convolution (padding 1, stride 1 or 2),
// 2x2 max pooling, fully connected layers, ReLU, masked l2 loss and SGD with
// momentum.
#ifndef MASKSCORE_NN_HPP_
#define MASKSCORE_NN_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace maskscore::nn {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // [C,H,W] accessors.
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] +
                 x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] +
                 x];
  }

  void fill(double v);
  bool all_finite() const;
  std::string shape_string() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<int>& shape);

// A trainable tensor with its gradient accumulator and momentum buffer.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;

  Param() = default;
  Param(std::string name, std::vector<int> shape);
  void zero_grad() { grad.fill(0.0); }
};

// Kaiming-style init: weights ~ N(0, 2/fan_in), bias zero.
void kaiming_init(Param& weight, Param& bias, int fan_in, std::mt19937_64& rng);

// --- convolution (kernel 3, padding 1) ------------------------------------

int conv_output_side(int side, int stride);

// input [C_in,H,W], weight [C_out,C_in,3,3], bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride);

// Accumulates into grad_weight/grad_bias and returns d(loss)/d(input).
Tensor conv2d_backward(const Tensor& input, const Tensor& weight, int stride,
                       const Tensor& grad_output, Tensor& grad_weight,
                       Tensor& grad_bias);

// --- pooling ---------------------------------------------------------------

Tensor max_pool_2x2(const Tensor& input);
Tensor max_pool_2x2_backward(const Tensor& input, const Tensor& grad_output);

// --- fully connected -------------------------------------------------------

// input [N] (any shape, read flat), weight [M,N], bias [M] -> [M].
Tensor fully_connected(const Tensor& input, const Tensor& weight,
                       const Tensor& bias);
Tensor fully_connected_backward(const Tensor& input, const Tensor& weight,
                                const Tensor& grad_output,
                                Tensor& grad_weight, Tensor& grad_bias);

// --- activations -----------------------------------------------------------

double relu(double x);
Tensor relu(const Tensor& x);
// Gradient through ReLU given the activation output.
Tensor relu_backward(const Tensor& output, const Tensor& grad_output);

// --- loss and optimizer ----------------------------------------------------

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean of (pred - target)^2 over supervised entries. With no supervised
// entry the loss and gradient are zero.
LossResult l2_loss(std::span<const double> pred, std::span<const double> target,
                   std::span<const std::uint8_t> supervision);

inline constexpr double kDefaultMomentum = 0.9;

// v <- momentum * v + grad ; p <- p - lr * v
void sgd_momentum_step(std::span<Param* const> params, double lr,
                       double momentum = kDefaultMomentum);

// --- gradient checking -----------------------------------------------------

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// loss_fn(true) must zero and fill every Param::grad and return the loss;
// loss_fn(false) only returns the loss. Every scalar of every parameter is
// compared with a central difference (every `stride`-th one across the
// concatenated parameters when stride > 1). Relative error is
// |analytic - numeric| / max(|analytic| + |numeric|, 1e-6).
GradCheckResult grad_check(std::span<Param* const> params,
                           const std::function<double(bool)>& loss_fn,
                           double epsilon = 1e-5, std::size_t stride = 1);

// --- checkpoint ------------------------------------------------------------

inline constexpr const char* kCheckpointSchema = "maskscore.checkpoint/1";

nlohmann::json params_to_json(std::span<const Param* const> params);
// Shapes and names must match the destination parameters exactly.
void params_from_json(const nlohmann::json& j, std::span<Param* const> params);

}  // namespace maskscore::nn

#endif  // MASKSCORE_NN_HPP_
