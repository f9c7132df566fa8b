// SPDX-License-Identifier: Apache-2.0
#include "tntc/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tntc/encoders.hpp"
#include "tntc/errors.hpp"

namespace tntc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

Tensor normal_tensor(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void require_rank(const Tensor& x, int rank, const char* what) {
  if (x.rank() != rank)
    throw ContractError(std::string(what) + ": expected rank " + std::to_string(rank) + " input, got shape " +
                        x.shape_string());
}

}  // namespace

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng& rng, double init_std)
    : in_(in_features), out_(out_features) {
  if (in_features <= 0 || out_features <= 0) throw ConfigError("linear layer sizes must be positive");
  const double stddev = init_std >= 0.0 ? init_std : std::sqrt(1.0 / in_features);
  weight_ = Param(normal_tensor({out_features, in_features}, stddev, rng));
  bias_ = Param(Tensor({out_features}));
}

Tensor Linear::forward(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) != in_)
    throw ContractError("linear: expected last dim " + std::to_string(in_) + ", got shape " + x.shape_string());
  input_ = x;
  const auto rows = static_cast<Eigen::Index>(x.size() / static_cast<std::size_t>(in_));
  auto shape = x.shape();
  shape.back() = out_;
  Tensor y(shape);
  ConstMapMat X(x.data(), rows, in_);
  ConstMapMat W(weight_.value.data(), out_, in_);
  MapMat Y(y.data(), rows, out_);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias_.value.data(), out_);
  return y;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const auto rows = static_cast<Eigen::Index>(grad_out.size() / static_cast<std::size_t>(out_));
  ConstMapMat dY(grad_out.data(), rows, out_);
  ConstMapMat X(input_.data(), rows, in_);
  MapMat dW(weight_.grad.data(), out_, in_);
  dW.noalias() += dY.transpose() * X;
  Eigen::Map<Eigen::RowVectorXd>(bias_.grad.data(), out_) += dY.colwise().sum();
  Tensor dx(input_.shape());
  MapMat dX(dx.data(), rows, in_);
  dX.noalias() = dY * ConstMapMat(weight_.value.data(), out_, in_);
  return dx;
}

void Linear::collect(Collector& c, const std::string& prefix) {
  c.param(prefix + ".weight", weight_);
  c.param(prefix + ".bias", bias_);
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(int dim, double eps) : dim_(dim), eps_(eps) {
  gamma_ = Param(Tensor({dim}, 1.0));
  beta_ = Param(Tensor({dim}));
}

Tensor LayerNorm::forward(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) != dim_)
    throw ContractError("layer norm: expected last dim " + std::to_string(dim_) + ", got " + x.shape_string());
  const std::size_t rows = x.size() / static_cast<std::size_t>(dim_);
  xhat_ = Tensor(x.shape());
  rstd_.assign(rows, 0.0);
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * dim_;
    double mean = 0.0;
    for (int i = 0; i < dim_; ++i) mean += xr[i];
    mean /= dim_;
    double var = 0.0;
    for (int i = 0; i < dim_; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= dim_;
    const double rstd = 1.0 / std::sqrt(var + eps_);
    rstd_[r] = rstd;
    double* hr = xhat_.data() + r * dim_;
    double* yr = y.data() + r * dim_;
    for (int i = 0; i < dim_; ++i) {
      hr[i] = (xr[i] - mean) * rstd;
      yr[i] = gamma_.value[static_cast<std::size_t>(i)] * hr[i] + beta_.value[static_cast<std::size_t>(i)];
    }
  }
  return y;
}

Tensor LayerNorm::backward(const Tensor& grad_out) {
  const std::size_t rows = grad_out.size() / static_cast<std::size_t>(dim_);
  Tensor dx(grad_out.shape());
  std::vector<double> dxhat(static_cast<std::size_t>(dim_));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = grad_out.data() + r * dim_;
    const double* h = xhat_.data() + r * dim_;
    double sum_d = 0.0, sum_dh = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      gamma_.grad[ui] += g[i] * h[i];
      beta_.grad[ui] += g[i];
      dxhat[ui] = g[i] * gamma_.value[ui];
      sum_d += dxhat[ui];
      sum_dh += dxhat[ui] * h[i];
    }
    double* out = dx.data() + r * dim_;
    for (int i = 0; i < dim_; ++i)
      out[i] = rstd_[r] * (dxhat[static_cast<std::size_t>(i)] - sum_d / dim_ - h[i] * sum_dh / dim_);
  }
  return dx;
}

void LayerNorm::collect(Collector& c, const std::string& prefix) {
  c.param(prefix + ".weight", gamma_);
  c.param(prefix + ".bias", beta_);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& rng)
    : cin_(in_channels), cout_(out_channels), k_(kernel), stride_(stride), pad_(padding), has_bias_(bias) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || padding < 0)
    throw ConfigError("invalid convolution geometry");
  const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  weight_ = Param(normal_tensor({out_channels, in_channels, kernel, kernel}, std::sqrt(2.0 / fan_in), rng));
  if (has_bias_) bias_ = Param(Tensor({out_channels}));
}

namespace {

void im2col(const double* img, int c_in, int h, int w, int k, int stride, int pad, int ho, int wo, double* cols) {
  const int hw_out = ho * wo;
  for (int c = 0; c < c_in; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * hw_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = img + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
}

void col2im(const double* cols, int c_in, int h, int w, int k, int stride, int pad, int ho, int wo, double* img) {
  const int hw_out = ho * wo;
  for (int c = 0; c < c_in; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * hw_out;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          double* dst = img + (static_cast<std::size_t>(c) * h + iy) * w;
          const double* src = row + oy * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x) {
  require_rank(x, 4, "conv2d");
  if (x.dim(1) != cin_)
    throw ContractError("conv2d: expected " + std::to_string(cin_) + " input channels, got shape " + x.shape_string());
  input_ = x;
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int ho = out_size(h), wo = out_size(w);
  if (ho <= 0 || wo <= 0) throw ContractError("conv2d: input " + x.shape_string() + " too small for kernel");
  const int kdim = cin_ * k_ * k_;
  Tensor y({n, cout_, ho, wo});
  std::vector<double> cols(static_cast<std::size_t>(kdim) * ho * wo);
  ConstMapMat W(weight_.value.data(), cout_, kdim);
  for (int b = 0; b < n; ++b) {
    im2col(x.data() + static_cast<std::size_t>(b) * cin_ * h * w, cin_, h, w, k_, stride_, pad_, ho, wo, cols.data());
    MapMat Y(y.data() + static_cast<std::size_t>(b) * cout_ * ho * wo, cout_, ho * wo);
    Y.noalias() = W * ConstMapMat(cols.data(), kdim, ho * wo);
    if (has_bias_) Y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias_.value.data(), cout_);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const int ho = out_size(h), wo = out_size(w);
  require_shape(grad_out, {n, cout_, ho, wo}, "conv2d backward");
  const int kdim = cin_ * k_ * k_;
  Tensor dx(input_.shape());
  std::vector<double> cols(static_cast<std::size_t>(kdim) * ho * wo);
  std::vector<double> dcols(cols.size());
  ConstMapMat W(weight_.value.data(), cout_, kdim);
  MapMat dW(weight_.grad.data(), cout_, kdim);
  for (int b = 0; b < n; ++b) {
    const double* xin = input_.data() + static_cast<std::size_t>(b) * cin_ * h * w;
    im2col(xin, cin_, h, w, k_, stride_, pad_, ho, wo, cols.data());
    ConstMapMat dY(grad_out.data() + static_cast<std::size_t>(b) * cout_ * ho * wo, cout_, ho * wo);
    dW.noalias() += dY * ConstMapMat(cols.data(), kdim, ho * wo).transpose();
    if (has_bias_) Eigen::Map<Eigen::VectorXd>(bias_.grad.data(), cout_) += dY.rowwise().sum();
    MapMat dC(dcols.data(), kdim, ho * wo);
    dC.noalias() = W.transpose() * dY;
    col2im(dcols.data(), cin_, h, w, k_, stride_, pad_, ho, wo, dx.data() + static_cast<std::size_t>(b) * cin_ * h * w);
  }
  return dx;
}

void Conv2d::collect(Collector& c, const std::string& prefix) {
  c.param(prefix + ".weight", weight_);
  if (has_bias_) c.param(prefix + ".bias", bias_);
}

// ---------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = Param(Tensor({channels}, 1.0));
  beta_ = Param(Tensor({channels}));
  running_mean_ = Tensor({channels});
  running_var_ = Tensor({channels}, 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  require_rank(x, 4, "batch norm");
  if (x.dim(1) != channels_)
    throw ContractError("batch norm: expected " + std::to_string(channels_) + " channels, got " + x.shape_string());
  mode_ = mode;
  const int n = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  const double count = static_cast<double>(n) * static_cast<double>(hw);
  xhat_ = Tensor(x.shape());
  rstd_.assign(static_cast<std::size_t>(channels_), 0.0);
  Tensor y(x.shape());
  for (int c = 0; c < channels_; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    double mean, var;
    if (mode == Mode::train) {
      mean = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = x.data() + (static_cast<std::size_t>(b) * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) mean += p[i];
      }
      mean /= count;
      var = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* p = x.data() + (static_cast<std::size_t>(b) * channels_ + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) var += (p[i] - mean) * (p[i] - mean);
      }
      var /= count;
      const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
      running_mean_[uc] = (1.0 - momentum_) * running_mean_[uc] + momentum_ * mean;
      running_var_[uc] = (1.0 - momentum_) * running_var_[uc] + momentum_ * unbiased;
    } else {
      mean = running_mean_[uc];
      var = running_var_[uc];
    }
    const double rstd = 1.0 / std::sqrt(var + eps_);
    rstd_[uc] = rstd;
    const double g = gamma_.value[uc], be = beta_.value[uc];
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double h = (x[off + i] - mean) * rstd;
        xhat_[off + i] = h;
        y[off + i] = g * h + be;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  require_shape(grad_out, xhat_.shape(), "batch norm backward");
  const int n = grad_out.dim(0);
  const std::size_t hw = static_cast<std::size_t>(grad_out.dim(2)) * grad_out.dim(3);
  const double count = static_cast<double>(n) * static_cast<double>(hw);
  Tensor dx(grad_out.shape());
  for (int c = 0; c < channels_; ++c) {
    const auto uc = static_cast<std::size_t>(c);
    double sum_g = 0.0, sum_gh = 0.0;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += grad_out[off + i];
        sum_gh += grad_out[off + i] * xhat_[off + i];
      }
    }
    gamma_.grad[uc] += sum_gh;
    beta_.grad[uc] += sum_g;
    const double g = gamma_.value[uc];
    const double rstd = rstd_[uc];
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * channels_ + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        if (mode_ == Mode::train)
          dx[off + i] = g * rstd * (grad_out[off + i] - sum_g / count - xhat_[off + i] * sum_gh / count);
        else
          dx[off + i] = g * rstd * grad_out[off + i];
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect(Collector& c, const std::string& prefix) {
  c.param(prefix + ".weight", gamma_);
  c.param(prefix + ".bias", beta_);
  c.buffer(prefix + ".running_mean", running_mean_);
  c.buffer(prefix + ".running_var", running_var_);
}

// ---------------------------------------------------------------- MaxPool2d

Tensor MaxPool2d::forward(const Tensor& x) {
  require_rank(x, 4, "max pool");
  in_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = out_size(h), wo = out_size(w);
  Tensor y({n, c, ho, wo});
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(b) * c + ch) * h * w;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = base;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= w) continue;
              const std::size_t idx = base + static_cast<std::size_t>(iy) * w + ix;
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[o] = best;
          argmax_[o] = best_idx;
        }
    }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor dx(in_shape_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) dx[argmax_[o]] += grad_out[o];
  return dx;
}

// ---------------------------------------------------------------- elementwise

void relu_inplace(Tensor& x) {
  for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(Tensor& grad, const Tensor& relu_out) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(relu_out[i] > 0.0)) grad[i] = 0.0;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

// ---------------------------------------------------------------- pooling / resampling

Tensor global_average_pool(const Tensor& x) {
  require_rank(x, 4, "global average pool");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor y({n, c});
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < hw; ++j) s += x[i * hw + j];
    y[i] = s / static_cast<double>(hw);
  }
  return y;
}

Tensor global_average_pool_backward(const Tensor& grad, const std::vector<int>& in_shape) {
  Tensor dx(in_shape);
  const std::size_t hw = static_cast<std::size_t>(in_shape[2]) * in_shape[3];
  for (std::size_t i = 0; i < grad.size(); ++i)
    for (std::size_t j = 0; j < hw; ++j) dx[i * hw + j] = grad[i] / static_cast<double>(hw);
  return dx;
}

Tensor average_pool(const Tensor& x, int l) {
  require_rank(x, 4, "average pool");
  if (l <= 0) throw ContractError("pool scale must be positive");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % l != 0 || w % l != 0)
    throw ContractError("pool scale " + std::to_string(l) + " does not divide spatial size " + std::to_string(h) + "x" +
                        std::to_string(w));
  if (l == 1) return x;
  const int ho = h / l, wo = w / l;
  Tensor y({n, c, ho, wo});
  const double inv = 1.0 / (static_cast<double>(l) * l);
  for (int p = 0; p < n * c; ++p) {
    const double* src = x.data() + static_cast<std::size_t>(p) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(p) * ho * wo;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) dst[(iy / l) * wo + ix / l] += src[iy * w + ix];
    for (int i = 0; i < ho * wo; ++i) dst[i] *= inv;
  }
  return y;
}

Tensor average_pool_backward(const Tensor& grad, int l) {
  if (l == 1) return grad;
  const int n = grad.dim(0), c = grad.dim(1), ho = grad.dim(2), wo = grad.dim(3);
  const int h = ho * l, w = wo * l;
  Tensor dx({n, c, h, w});
  const double inv = 1.0 / (static_cast<double>(l) * l);
  for (int p = 0; p < n * c; ++p) {
    const double* src = grad.data() + static_cast<std::size_t>(p) * ho * wo;
    double* dst = dx.data() + static_cast<std::size_t>(p) * h * w;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) dst[iy * w + ix] = src[(iy / l) * wo + ix / l] * inv;
  }
  return dx;
}

Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w) {
  require_rank(x, 4, "upsample");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h == out_h && w == out_w) return x;
  const auto rows = BilinearTaps::make(h, out_h);
  const auto cols = BilinearTaps::make(w, out_w);
  Tensor y({n, c, out_h, out_w});
  for (int p = 0; p < n * c; ++p) {
    const double* src = x.data() + static_cast<std::size_t>(p) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(p) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const auto uy = static_cast<std::size_t>(oy);
      const double fy = rows.frac[uy];
      const double* r0 = src + rows.lo[uy] * w;
      const double* r1 = src + rows.hi[uy] * w;
      for (int ox = 0; ox < out_w; ++ox) {
        const auto ux = static_cast<std::size_t>(ox);
        const double fx = cols.frac[ux];
        const int x0 = cols.lo[ux], x1 = cols.hi[ux];
        dst[oy * out_w + ox] = (1 - fy) * ((1 - fx) * r0[x0] + fx * r0[x1]) + fy * ((1 - fx) * r1[x0] + fx * r1[x1]);
      }
    }
  }
  return y;
}

Tensor upsample_bilinear_backward(const Tensor& grad, int in_h, int in_w) {
  const int n = grad.dim(0), c = grad.dim(1), out_h = grad.dim(2), out_w = grad.dim(3);
  if (in_h == out_h && in_w == out_w) return grad;
  const auto rows = BilinearTaps::make(in_h, out_h);
  const auto cols = BilinearTaps::make(in_w, out_w);
  Tensor dx({n, c, in_h, in_w});
  for (int p = 0; p < n * c; ++p) {
    const double* g = grad.data() + static_cast<std::size_t>(p) * out_h * out_w;
    double* dst = dx.data() + static_cast<std::size_t>(p) * in_h * in_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const auto uy = static_cast<std::size_t>(oy);
      const double fy = rows.frac[uy];
      double* r0 = dst + rows.lo[uy] * in_w;
      double* r1 = dst + rows.hi[uy] * in_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const auto ux = static_cast<std::size_t>(ox);
        const double fx = cols.frac[ux];
        const int x0 = cols.lo[ux], x1 = cols.hi[ux];
        const double v = g[oy * out_w + ox];
        r0[x0] += (1 - fy) * (1 - fx) * v;
        r0[x1] += (1 - fy) * fx * v;
        r1[x0] += fy * (1 - fx) * v;
        r1[x1] += fy * fx * v;
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- softmax / loss

Tensor softmax_rows(const Tensor& logits) {
  const int d = logits.dim(-1);
  const std::size_t rows = logits.size() / static_cast<std::size_t>(d);
  Tensor p(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * d;
    double* out = p.data() + r * d;
    const double m = *std::max_element(z, z + d);
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (out[i] = std::exp(z[i] - m));
    for (int i = 0; i < d; ++i) out[i] /= s;
  }
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "cross entropy");
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw ContractError("cross entropy: " + std::to_string(labels.size()) + " labels for batch of " + std::to_string(n));
  LossResult res;
  res.grad = softmax_rows(logits);
  for (int b = 0; b < n; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= k) throw ContractError("cross entropy: label out of range");
    const double* z = logits.data() + static_cast<std::size_t>(b) * k;
    const double m = *std::max_element(z, z + k);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::exp(z[i] - m);
    res.loss += (m + std::log(s)) - z[y];
    res.grad[static_cast<std::size_t>(b) * k + y] -= 1.0;
  }
  res.loss /= n;
  res.grad *= 1.0 / n;
  return res;
}

}  // namespace tntc
