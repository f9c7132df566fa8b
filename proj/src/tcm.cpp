// SPDX-License-Identifier: Apache-2.0
#include "tntc/tcm.hpp"

#include <Eigen/Core>
#include <cmath>

#include "tntc/errors.hpp"

namespace tntc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Strided = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStrided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using MapMat = Eigen::Map<RowMat>;

constexpr std::array<int, 4> kLevelScales = {8, 4, 2, 1};

}  // namespace

void TcmConfig::validate() const {
  const std::string where = "tcm level " + std::to_string(level) + ": ";
  if (level < 1 || level > 4) throw ConfigError("tcm level must be 1..4");
  if (scale <= 0) throw ConfigError(where + "scale must be positive");
  if (embed_dim <= 0 || heads <= 0 || depth <= 0) throw ConfigError(where + "embed_dim, heads and depth must be positive");
  if (embed_dim % heads != 0)
    throw ConfigError(where + "embed_dim " + std::to_string(embed_dim) + " not divisible by heads " + std::to_string(heads));
  if (!(mlp_ratio > 0.0) || hidden_dim() <= 0) throw ConfigError(where + "mlp_ratio must be positive");
}

TcmConfig TcmConfig::for_level(int level, int embed_dim, int depth, int heads, double mlp_ratio) {
  if (level < 1 || level > 4) throw ConfigError("tcm level must be 1..4");
  return {level, kLevelScales[static_cast<std::size_t>(level - 1)], embed_dim, depth, heads, mlp_ratio};
}

// ---------------------------------------------------------------- attention

MultiHeadSelfAttention::MultiHeadSelfAttention(int dim, int heads, Rng& rng)
    : dim_(dim), heads_(heads), qkv_(dim, 3 * dim, rng), proj_(dim, dim, rng) {
  if (dim % heads != 0) throw ConfigError("attention dim must be divisible by heads");
}

Tensor MultiHeadSelfAttention::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(2) != dim_)
    throw ContractError("attention: expected [N, T, " + std::to_string(dim_) + "], got " + x.shape_string());
  const int n = x.dim(0), t = x.dim(1), dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  qkv_out_ = qkv_.forward(x);
  attn_ = Tensor({n, heads_, t, t});
  Tensor ctx({n, t, dim_});
  for (int b = 0; b < n; ++b) {
    const double* base = qkv_out_.data() + static_cast<std::size_t>(b) * t * 3 * dim_;
    for (int h = 0; h < heads_; ++h) {
      ConstStrided Q(base + h * dh, t, dh, Eigen::OuterStride<>(3 * dim_));
      ConstStrided K(base + dim_ + h * dh, t, dh, Eigen::OuterStride<>(3 * dim_));
      ConstStrided V(base + 2 * dim_ + h * dh, t, dh, Eigen::OuterStride<>(3 * dim_));
      MapMat A(attn_.data() + (static_cast<std::size_t>(b) * heads_ + h) * t * t, t, t);
      A.noalias() = (Q * K.transpose()) * scale;
      for (int r = 0; r < t; ++r) {
        const double m = A.row(r).maxCoeff();
        A.row(r) = (A.row(r).array() - m).exp();
        A.row(r) /= A.row(r).sum();
      }
      Strided O(ctx.data() + static_cast<std::size_t>(b) * t * dim_ + h * dh, t, dh, Eigen::OuterStride<>(dim_));
      O.noalias() = A * V;
    }
  }
  return proj_.forward(ctx);
}

Tensor MultiHeadSelfAttention::backward(const Tensor& grad_out) {
  const Tensor dctx = proj_.backward(grad_out);
  const int n = attn_.dim(0), t = attn_.dim(2), dh = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor dqkv(qkv_out_.shape());
  RowMat dA(t, t), dS(t, t);
  for (int b = 0; b < n; ++b) {
    const double* base = qkv_out_.data() + static_cast<std::size_t>(b) * t * 3 * dim_;
    double* dbase = dqkv.data() + static_cast<std::size_t>(b) * t * 3 * dim_;
    for (int h = 0; h < heads_; ++h) {
      const Eigen::OuterStride<> qs(3 * dim_);
      ConstStrided Q(base + h * dh, t, dh, qs);
      ConstStrided K(base + dim_ + h * dh, t, dh, qs);
      ConstStrided V(base + 2 * dim_ + h * dh, t, dh, qs);
      Strided dQ(dbase + h * dh, t, dh, qs);
      Strided dK(dbase + dim_ + h * dh, t, dh, qs);
      Strided dV(dbase + 2 * dim_ + h * dh, t, dh, qs);
      Eigen::Map<const RowMat> A(attn_.data() + (static_cast<std::size_t>(b) * heads_ + h) * t * t, t, t);
      ConstStrided dO(dctx.data() + static_cast<std::size_t>(b) * t * dim_ + h * dh, t, dh, Eigen::OuterStride<>(dim_));
      dV.noalias() = A.transpose() * dO;
      dA.noalias() = dO * V.transpose();
      const Eigen::VectorXd row_dot = (dA.array() * A.array()).rowwise().sum();
      dS = A.array() * (dA.array().colwise() - row_dot.array());
      dQ.noalias() = (dS * K) * scale;
      dK.noalias() = (dS.transpose() * Q) * scale;
    }
  }
  return qkv_.backward(dqkv);
}

void MultiHeadSelfAttention::collect(Collector& c, const std::string& prefix) {
  qkv_.collect(c, prefix + ".qkv");
  proj_.collect(c, prefix + ".proj");
}

// ---------------------------------------------------------------- encoder layer

TransformerLayer::TransformerLayer(int dim, int heads, int hidden, Rng& rng)
    : ln1_(dim), ln2_(dim), attn_(dim, heads, rng), fc1_(dim, hidden, rng), fc2_(hidden, dim, rng) {}

Tensor TransformerLayer::forward(const Tensor& x) {
  Tensor x1 = x;
  x1 += attn_.forward(ln1_.forward(x));
  fc1_out_ = fc1_.forward(ln2_.forward(x1));
  Tensor act = fc1_out_;
  for (double& v : act.values()) v = gelu(v);
  Tensor y = x1;
  y += fc2_.forward(act);
  return y;
}

Tensor TransformerLayer::backward(const Tensor& grad_out) {
  Tensor g_act = fc2_.backward(grad_out);
  for (std::size_t i = 0; i < g_act.size(); ++i) g_act[i] *= gelu_derivative(fc1_out_[i]);
  Tensor g_x1 = grad_out;
  g_x1 += ln2_.backward(fc1_.backward(g_act));
  Tensor g_x = g_x1;
  g_x += ln1_.backward(attn_.backward(g_x1));
  return g_x;
}

void TransformerLayer::collect(Collector& c, const std::string& prefix) {
  ln1_.collect(c, prefix + ".norm1");
  attn_.collect(c, prefix + ".attn");
  ln2_.collect(c, prefix + ".norm2");
  fc1_.collect(c, prefix + ".mlp.fc1");
  fc2_.collect(c, prefix + ".mlp.fc2");
}

// ---------------------------------------------------------------- encoder

TransformerEncoder::TransformerEncoder(int dim, int depth, int heads, int hidden, Rng& rng)
    : dim_(dim), final_norm_(dim) {
  if (depth <= 0) throw ConfigError("transformer depth must be positive");
  for (int i = 0; i < depth; ++i) layers_.emplace_back(dim, heads, hidden, rng);
  out_proj_ = Linear(dim, dim, rng);
}

Tensor TransformerEncoder::forward(const Tensor& tokens) {
  if (tokens.rank() != 3 || tokens.dim(2) != dim_)
    throw ConfigError("transformer: token dim " + (tokens.rank() == 3 ? std::to_string(tokens.dim(2)) : tokens.shape_string()) +
                      " does not match embed_dim " + std::to_string(dim_));
  Tensor h = tokens;
  for (auto& layer : layers_) h = layer.forward(h);
  return out_proj_.forward(final_norm_.forward(h));
}

Tensor TransformerEncoder::backward(const Tensor& grad_out) {
  Tensor g = final_norm_.backward(out_proj_.backward(grad_out));
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->backward(g);
  return g;
}

void TransformerEncoder::collect(Collector& c, const std::string& prefix) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(c, prefix + ".layer" + std::to_string(i));
  final_norm_.collect(c, prefix + ".norm");
  out_proj_.collect(c, prefix + ".out_proj");
}

Tensor TransformerEncoder::mean_attention() const {
  const Tensor& first = layers_.front().attention();
  if (first.empty()) throw ContractError("no attention recorded; run a forward pass first");
  const int n = first.dim(0), heads = first.dim(1), t = first.dim(2);
  Tensor mean({n, t, t});
  const double w = 1.0 / (static_cast<double>(heads) * static_cast<double>(layers_.size()));
  const std::size_t tt = static_cast<std::size_t>(t) * t;
  for (const auto& layer : layers_) {
    const Tensor& a = layer.attention();
    for (int b = 0; b < n; ++b)
      for (int h = 0; h < heads; ++h) {
        const double* src = a.data() + (static_cast<std::size_t>(b) * heads + h) * tt;
        double* dst = mean.data() + static_cast<std::size_t>(b) * tt;
        for (std::size_t i = 0; i < tt; ++i) dst[i] += w * src[i];
      }
  }
  return mean;
}

// ---------------------------------------------------------------- token layout

Tensor tokenize_concat(const Tensor& f_joint, const Tensor& f_affective, const Tensor& pos) {
  if (f_joint.rank() != 4 || f_joint.shape() != f_affective.shape())
    throw ContractError("tokenize: stream maps must share a rank-4 shape, got " + f_joint.shape_string() + " and " +
                        f_affective.shape_string());
  const int n = f_joint.dim(0), c = f_joint.dim(1), h = f_joint.dim(2), w = f_joint.dim(3);
  const int hw = h * w;
  require_shape(pos, {2 * hw, c}, "tokenize positional embedding");
  Tensor tokens({n, 2 * hw, c});
  for (int b = 0; b < n; ++b)
    for (int s = 0; s < 2; ++s) {
      const Tensor& f = s == 0 ? f_joint : f_affective;
      for (int ch = 0; ch < c; ++ch) {
        const double* src = f.data() + (static_cast<std::size_t>(b) * c + ch) * hw;
        for (int p = 0; p < hw; ++p) {
          const std::size_t tok = static_cast<std::size_t>(s) * hw + p;
          tokens[(static_cast<std::size_t>(b) * 2 * hw + tok) * c + ch] = src[p] + pos[tok * c + ch];
        }
      }
    }
  return tokens;
}

std::pair<Tensor, Tensor> split_tokens(const Tensor& tokens, int h, int w) {
  const int hw = h * w;
  if (tokens.rank() != 3 || tokens.dim(1) != 2 * hw)
    throw ContractError("split: expected [N, " + std::to_string(2 * hw) + ", C] tokens, got " + tokens.shape_string());
  const int n = tokens.dim(0), c = tokens.dim(2);
  Tensor fj({n, c, h, w}), fa({n, c, h, w});
  for (int b = 0; b < n; ++b)
    for (int s = 0; s < 2; ++s) {
      Tensor& f = s == 0 ? fj : fa;
      for (int p = 0; p < hw; ++p) {
        const double* src = tokens.data() + (static_cast<std::size_t>(b) * 2 * hw + static_cast<std::size_t>(s) * hw + p) * c;
        for (int ch = 0; ch < c; ++ch) f[(static_cast<std::size_t>(b) * c + ch) * hw + p] = src[ch];
      }
    }
  return {std::move(fj), std::move(fa)};
}

namespace {

// Inverse layout of split_tokens: two [N, C, h, w] maps into [N, 2hw, C].
Tensor merge_token_grads(const Tensor& gj, const Tensor& ga) {
  const int n = gj.dim(0), c = gj.dim(1), hw = gj.dim(2) * gj.dim(3);
  Tensor tokens({n, 2 * hw, c});
  for (int b = 0; b < n; ++b)
    for (int s = 0; s < 2; ++s) {
      const Tensor& f = s == 0 ? gj : ga;
      for (int p = 0; p < hw; ++p) {
        double* dst = tokens.data() + (static_cast<std::size_t>(b) * 2 * hw + static_cast<std::size_t>(s) * hw + p) * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] = f[(static_cast<std::size_t>(b) * c + ch) * hw + p];
      }
    }
  return tokens;
}

}  // namespace

std::pair<Tensor, Tensor> split_upsample_add(const Tensor& tokens, const Tensor& f_joint, const Tensor& f_affective) {
  if (f_joint.rank() != 4 || f_joint.shape() != f_affective.shape())
    throw ContractError("split/add: stream maps must share a rank-4 shape");
  const int c = f_joint.dim(1), hs = f_joint.dim(2), ws = f_joint.dim(3);
  if (tokens.rank() != 3 || tokens.dim(0) != f_joint.dim(0) || tokens.dim(2) != c || tokens.dim(1) % 2 != 0)
    throw ContractError("split/add: token shape " + tokens.shape_string() + " incompatible with stream " +
                        f_joint.shape_string());
  const int half = tokens.dim(1) / 2;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(half))));
  if (side * side != half) throw ContractError("split/add: token grid is not square: " + std::to_string(half));
  auto [cj, ca] = split_tokens(tokens, side, side);
  Tensor oj = f_joint, oa = f_affective;
  oj += upsample_bilinear(cj, hs, ws);
  oa += upsample_bilinear(ca, hs, ws);
  return {std::move(oj), std::move(oa)};
}

// ---------------------------------------------------------------- TCM

Tcm::Tcm(const TcmConfig& cfg, int stream_size, Rng& rng) : cfg_(cfg), stream_size_(stream_size) {
  cfg_.validate();
  if (stream_size <= 0 || stream_size % cfg_.scale != 0)
    throw ConfigError("tcm level " + std::to_string(cfg_.level) + ": scale " + std::to_string(cfg_.scale) +
                      " does not divide stream size " + std::to_string(stream_size));
  grid_ = stream_size / cfg_.scale;
  std::normal_distribution<double> dist(0.0, 0.02);
  Tensor pos({token_count(), cfg_.embed_dim});
  for (double& v : pos.values()) v = dist(rng);
  pos_ = Param(std::move(pos));
  encoder_ = TransformerEncoder(cfg_.embed_dim, cfg_.depth, cfg_.heads, cfg_.hidden_dim(), rng);
}

std::pair<Tensor, Tensor> Tcm::forward(const Tensor& f_joint, const Tensor& f_affective) {
  if (f_joint.rank() != 4 || f_joint.dim(1) != cfg_.embed_dim || f_joint.dim(2) != stream_size_ ||
      f_joint.dim(3) != stream_size_)
    throw ContractError("tcm level " + std::to_string(cfg_.level) + ": expected [N," + std::to_string(cfg_.embed_dim) +
                        "," + std::to_string(stream_size_) + "," + std::to_string(stream_size_) + "], got " +
                        f_joint.shape_string());
  const Tensor tokens = tokenize_concat(average_pool(f_joint, cfg_.scale), average_pool(f_affective, cfg_.scale), pos_.value);
  return split_upsample_add(encoder_.forward(tokens), f_joint, f_affective);
}

std::pair<Tensor, Tensor> Tcm::backward(const Tensor& grad_joint, const Tensor& grad_affective) {
  const Tensor gcj = upsample_bilinear_backward(grad_joint, grid_, grid_);
  const Tensor gca = upsample_bilinear_backward(grad_affective, grid_, grid_);
  const Tensor g_tokens = encoder_.backward(merge_token_grads(gcj, gca));

  const int n = g_tokens.dim(0), t = g_tokens.dim(1), c = g_tokens.dim(2);
  for (int b = 0; b < n; ++b)
    for (std::size_t i = 0; i < static_cast<std::size_t>(t) * c; ++i)
      pos_.grad[i] += g_tokens[static_cast<std::size_t>(b) * t * c + i];

  auto [gpj, gpa] = split_tokens(g_tokens, grid_, grid_);
  Tensor dj = grad_joint, da = grad_affective;
  dj += average_pool_backward(gpj, cfg_.scale);
  da += average_pool_backward(gpa, cfg_.scale);
  return {std::move(dj), std::move(da)};
}

void Tcm::collect(Collector& c, const std::string& prefix) {
  c.param(prefix + ".pos_embed", pos_);
  encoder_.collect(c, prefix + ".encoder");
}

}  // namespace tntc
