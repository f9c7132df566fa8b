// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "tntc/nn.hpp"

namespace tntc {

struct TcmConfig {
  int level = 1;
  int scale = 8;
  int embed_dim = 64;
  int depth = 2;
  int heads = 4;
  double mlp_ratio = 4.0;

  void validate() const;
  int hidden_dim() const { return static_cast<int>(embed_dim * mlp_ratio); }

  /// Per-level defaults: scale 8/4/2/1 and embedding width equal to the
  /// stream width at that level.
  static TcmConfig for_level(int level, int embed_dim, int depth = 2, int heads = 4, double mlp_ratio = 4.0);
};

/// Multi-head scaled dot-product self-attention over [N, T, D] tokens with a
/// fused query/key/value projection and an output projection.
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(int dim, int heads, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  /// Softmax weights of the last forward, [N, heads, T, T].
  const Tensor& attention() const { return attn_; }

 private:
  int dim_ = 0, heads_ = 1;
  Linear qkv_, proj_;
  Tensor qkv_out_, attn_;
};

/// Pre-norm encoder layer: x + MHSA(LN(x)), then x + MLP(LN(x)) with GELU.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(int dim, int heads, int hidden, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  const Tensor& attention() const { return attn_.attention(); }

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadSelfAttention attn_;
  Linear fc1_, fc2_;
  Tensor fc1_out_;
};

/// Stack of pre-norm layers followed by a final layer norm and a linear
/// output projection. Zeroing the output projection makes the encoder
/// output identically zero.
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(int dim, int depth, int heads, int hidden, Rng& rng);

  Tensor forward(const Tensor& tokens);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  int dim() const { return dim_; }
  int depth() const { return static_cast<int>(layers_.size()); }
  /// Per-head maps of layer `layer` from the last forward, [N, heads, T, T].
  const Tensor& attention(int layer) const { return layers_[static_cast<std::size_t>(layer)].attention(); }
  /// Mean over heads and layers, [N, T, T]; rows stay stochastic.
  Tensor mean_attention() const;
  Linear& output_projection() { return out_proj_; }

 private:
  int dim_ = 0;
  std::vector<TransformerLayer> layers_;
  LayerNorm final_norm_;
  Linear out_proj_;
};

/// Concatenates two [N, C, h, w] maps into [N, 2hw, C] tokens (joint stream
/// first, row-major spatial order) and adds `pos` ([2hw, C]).
Tensor tokenize_concat(const Tensor& f_joint, const Tensor& f_affective, const Tensor& pos);

/// Splits [N, 2hw, C] tokens back into two [N, C, h, w] maps.
std::pair<Tensor, Tensor> split_tokens(const Tensor& tokens, int h, int w);

/// Splits `tokens`, upsamples each half to the original stream size and adds
/// it to the corresponding original stream map.
std::pair<Tensor, Tensor> split_upsample_add(const Tensor& tokens, const Tensor& f_joint, const Tensor& f_affective);

/// Transformer-based complementarity module for one backbone level.
class Tcm {
 public:
  Tcm() = default;
  /// `stream_size` is the spatial side of the level's feature maps.
  Tcm(const TcmConfig& cfg, int stream_size, Rng& rng);

  std::pair<Tensor, Tensor> forward(const Tensor& f_joint, const Tensor& f_affective);
  std::pair<Tensor, Tensor> backward(const Tensor& grad_joint, const Tensor& grad_affective);
  void collect(Collector& c, const std::string& prefix);

  const TcmConfig& config() const { return cfg_; }
  int grid_size() const { return grid_; }
  int token_count() const { return 2 * grid_ * grid_; }
  TransformerEncoder& encoder() { return encoder_; }
  const TransformerEncoder& encoder() const { return encoder_; }
  Param& positional_embedding() { return pos_; }

 private:
  TcmConfig cfg_;
  int stream_size_ = 0, grid_ = 0;
  Param pos_;
  TransformerEncoder encoder_;
};

}  // namespace tntc
