// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tntc/tensor.hpp"

namespace tntc {

using Rng = std::mt19937_64;

enum class Mode { train, eval };

/// A learnable tensor and its accumulated gradient.
struct Param {
  Tensor value;
  Tensor grad;

  Param() = default;
  explicit Param(Tensor v) : value(std::move(v)), grad(Tensor::zeros_like(value)) {}
};

struct NamedParam {
  std::string name;
  Param* param;
};

struct NamedBuffer {
  std::string name;
  Tensor* value;
};

/// Gathers hierarchical parameter and buffer names from a module tree.
class Collector {
 public:
  void param(const std::string& name, Param& p) { params_.push_back({name, &p}); }
  void buffer(const std::string& name, Tensor& t) { buffers_.push_back({name, &t}); }

  std::vector<NamedParam>& params() { return params_; }
  std::vector<NamedBuffer>& buffers() { return buffers_; }

 private:
  std::vector<NamedParam> params_;
  std::vector<NamedBuffer> buffers_;
};

/// Fully connected layer over the last axis: y = x Wᵀ + b, W is [out, in].
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng, double init_std = -1.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0;
  Param weight_, bias_;
  Tensor input_;
};

/// Normalization over the last axis with learned scale and shift.
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int dim, double eps = 1e-5);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

 private:
  int dim_ = 0;
  double eps_ = 1e-5;
  Param gamma_, beta_;
  Tensor xhat_;
  std::vector<double> rstd_;
};

/// 2-D convolution on [N, C, H, W] via im2col and a dense GEMM.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }
  int in_channels() const { return cin_; }
  int out_channels() const { return cout_; }
  Param& weight() { return weight_; }

 private:
  int cin_ = 0, cout_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
  bool has_bias_ = false;
  Param weight_, bias_;
  Tensor input_;
};

/// Batch normalization over (N, H, W) per channel. Running statistics use
/// momentum 0.1 and the unbiased batch variance.
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  Param& gamma() { return gamma_; }
  Param& beta() { return beta_; }
  Tensor& running_mean() { return running_mean_; }
  Tensor& running_var() { return running_var_; }

 private:
  int channels_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  Mode mode_ = Mode::eval;
  Tensor xhat_;
  std::vector<double> rstd_;
};

/// 3×3 stride-2 max pooling with padding 1, as in the residual network stem.
class MaxPool2d {
 public:
  MaxPool2d(int kernel = 3, int stride = 2, int padding = 1) : k_(kernel), stride_(stride), pad_(padding) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

 private:
  int k_, stride_, pad_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

void relu_inplace(Tensor& x);
/// Zeroes gradient entries where the ReLU output was not positive.
void relu_backward_inplace(Tensor& grad, const Tensor& relu_out);

double gelu(double x);
double gelu_derivative(double x);

/// Mean over (H, W) per channel: [N, C, H, W] -> [N, C].
Tensor global_average_pool(const Tensor& x);
Tensor global_average_pool_backward(const Tensor& grad, const std::vector<int>& in_shape);

/// Non-overlapping l×l average pooling; l must divide H and W.
Tensor average_pool(const Tensor& x, int l);
Tensor average_pool_backward(const Tensor& grad, int l);

/// Half-pixel bilinear resize of [N, C, h, w] to [N, C, H, W].
Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w);
Tensor upsample_bilinear_backward(const Tensor& grad, int in_h, int in_w);

/// Row-wise softmax over the last axis.
Tensor softmax_rows(const Tensor& logits);

struct LossResult {
  double loss = 0.0;
  Tensor grad;  // d(mean loss)/d(logits)
};

/// Mean categorical cross-entropy of softmax(logits) against integer labels,
/// computed with log-sum-exp.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace tntc
