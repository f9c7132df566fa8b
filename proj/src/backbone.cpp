// SPDX-License-Identifier: Apache-2.0
#include "tntc/backbone.hpp"

#include "tntc/errors.hpp"

namespace tntc {

std::string_view stream_name(Stream s) { return s == Stream::joint ? "joint" : "affective"; }

void BackboneConfig::validate() const {
  for (int i = 0; i < kNumLevels; ++i) {
    if (channel_widths[static_cast<std::size_t>(i)] <= 0)
      throw ConfigError("backbone.channel_widths[" + std::to_string(i) + "] must be positive");
    if (blocks_per_level[static_cast<std::size_t>(i)] <= 0)
      throw ConfigError("backbone.blocks_per_level[" + std::to_string(i) + "] must be positive");
  }
  if (input_size <= 0 || input_size % 32 != 0)
    throw ConfigError("backbone.input_size must be a positive multiple of 32, got " + std::to_string(input_size));
}

int BackboneConfig::level_size(int level) const {
  if (level < 1 || level > kNumLevels) throw ContractError("level must be 1..4");
  return input_size / (4 << (level - 1));
}

BasicBlock::BasicBlock(int in_channels, int out_channels, int stride, bool zero_init, Rng& rng)
    : conv1_(in_channels, out_channels, 3, stride, 1, false, rng),
      conv2_(out_channels, out_channels, 3, 1, 1, false, rng),
      bn1_(out_channels),
      bn2_(out_channels),
      project_(stride != 1 || in_channels != out_channels) {
  if (project_) {
    proj_conv_ = Conv2d(in_channels, out_channels, 1, stride, 0, false, rng);
    proj_bn_ = BatchNorm2d(out_channels);
  }
  if (zero_init) bn2_.gamma().value.fill(0.0);
}

Tensor BasicBlock::forward(const Tensor& x, Mode mode) {
  mid_ = bn1_.forward(conv1_.forward(x), mode);
  relu_inplace(mid_);
  Tensor y = bn2_.forward(conv2_.forward(mid_), mode);
  y += project_ ? proj_bn_.forward(proj_conv_.forward(x), mode) : x;
  relu_inplace(y);
  out_ = y;
  return y;
}

Tensor BasicBlock::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  relu_backward_inplace(g, out_);
  Tensor g_mid = conv2_.backward(bn2_.backward(g));
  relu_backward_inplace(g_mid, mid_);
  Tensor dx = conv1_.backward(bn1_.backward(g_mid));
  dx += project_ ? proj_conv_.backward(proj_bn_.backward(g)) : g;
  return dx;
}

void BasicBlock::collect(Collector& c, const std::string& prefix) {
  conv1_.collect(c, prefix + ".conv1");
  bn1_.collect(c, prefix + ".bn1");
  conv2_.collect(c, prefix + ".conv2");
  bn2_.collect(c, prefix + ".bn2");
  if (project_) {
    proj_conv_.collect(c, prefix + ".downsample.conv");
    proj_bn_.collect(c, prefix + ".downsample.bn");
  }
}

StreamBackbone::StreamBackbone(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const int stem_width = cfg_.channel_widths[0];
  stem_conv_ = Conv2d(3, stem_width, 7, 2, 3, false, rng);
  stem_bn_ = BatchNorm2d(stem_width);
  int in_ch = stem_width;
  for (int lvl = 0; lvl < kNumLevels; ++lvl) {
    const auto ul = static_cast<std::size_t>(lvl);
    const int width = cfg_.channel_widths[ul];
    for (int b = 0; b < cfg_.blocks_per_level[ul]; ++b) {
      const int stride = (lvl > 0 && b == 0) ? 2 : 1;
      levels_[ul].emplace_back(in_ch, width, stride, cfg_.zero_init_residual, rng);
      in_ch = width;
    }
  }
}

std::vector<int> StreamBackbone::level_input_shape(int level) const {
  if (level < 1 || level > kNumLevels) throw ContractError("level must be 1..4");
  if (level == 1) return {3, cfg_.input_size, cfg_.input_size};
  const int s = cfg_.level_size(level - 1);
  return {cfg_.level_width(level - 1), s, s};
}

Tensor StreamBackbone::forward_level(const Tensor& x, int level, Mode mode) {
  const auto expected = level_input_shape(level);
  if (x.rank() != 4 || std::vector<int>(x.shape().begin() + 1, x.shape().end()) != expected)
    throw ContractError("level " + std::to_string(level) + " expects input [N," + shape_to_string(expected).substr(1) +
                        " but got " + x.shape_string());
  Tensor h;
  if (level == 1) {
    stem_act_ = stem_bn_.forward(stem_conv_.forward(x), mode);
    relu_inplace(stem_act_);
    h = stem_pool_.forward(stem_act_);
  } else {
    h = x;
  }
  for (auto& block : levels_[static_cast<std::size_t>(level - 1)]) h = block.forward(h, mode);
  return h;
}

Tensor StreamBackbone::backward_level(const Tensor& grad_out, int level) {
  Tensor g = grad_out;
  auto& blocks = levels_[static_cast<std::size_t>(level - 1)];
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g);
  if (level == 1) {
    g = stem_pool_.backward(g);
    relu_backward_inplace(g, stem_act_);
    g = stem_conv_.backward(stem_bn_.backward(g));
  }
  return g;
}

void StreamBackbone::collect(Collector& c, const std::string& prefix) {
  stem_conv_.collect(c, prefix + ".stem.conv");
  stem_bn_.collect(c, prefix + ".stem.bn");
  for (int lvl = 0; lvl < kNumLevels; ++lvl) {
    auto& blocks = levels_[static_cast<std::size_t>(lvl)];
    for (std::size_t b = 0; b < blocks.size(); ++b)
      blocks[b].collect(c, prefix + ".level" + std::to_string(lvl + 1) + ".block" + std::to_string(b));
  }
}

}  // namespace tntc
