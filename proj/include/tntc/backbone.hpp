// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tntc/nn.hpp"

namespace tntc {

inline constexpr int kNumLevels = 4;

enum class Stream { joint, affective };
std::string_view stream_name(Stream s);

struct BackboneConfig {
  std::array<int, kNumLevels> channel_widths{64, 128, 256, 512};
  std::array<int, kNumLevels> blocks_per_level{3, 4, 6, 3};
  int input_size = 224;
  /// Starts every block's last batch-norm scale at zero.
  bool zero_init_residual = false;

  /// 34-layer layout at 224×224.
  static BackboneConfig paper() { return {}; }
  /// Widths 8/16/32/64, one block per level, 64×64 input.
  static BackboneConfig reduced() { return {{8, 16, 32, 64}, {1, 1, 1, 1}, 64, false}; }

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  /// Spatial side of the level-`level` output (1-based): input/4, /8, /16, /32.
  int level_size(int level) const;
  int level_width(int level) const { return channel_widths[static_cast<std::size_t>(level - 1)]; }
};

/// Two 3×3 convolutions with batch norm and an identity or projected
/// shortcut.
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(int in_channels, int out_channels, int stride, bool zero_init, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& grad_out);
  void collect(Collector& c, const std::string& prefix);

  BatchNorm2d& last_norm() { return bn2_; }

 private:
  Conv2d conv1_, conv2_;
  BatchNorm2d bn1_, bn2_;
  bool project_ = false;
  Conv2d proj_conv_;
  BatchNorm2d proj_bn_;
  Tensor mid_, out_;
};

/// One stream's hierarchical feature extractor. Level 1 includes the stem
/// (7×7 stride-2 convolution, batch norm, ReLU, 3×3 stride-2 max pool).
class StreamBackbone {
 public:
  StreamBackbone() = default;
  StreamBackbone(const BackboneConfig& cfg, Rng& rng);

  /// Runs a single level. Throws ContractError naming expected vs actual
  /// shape when `x` is not the input that level expects.
  Tensor forward_level(const Tensor& x, int level, Mode mode);
  Tensor backward_level(const Tensor& grad_out, int level);

  /// Expected [C, H, W] input of `level` (the image for level 1).
  std::vector<int> level_input_shape(int level) const;

  void collect(Collector& c, const std::string& prefix);
  const BackboneConfig& config() const { return cfg_; }

 private:
  BackboneConfig cfg_;
  Conv2d stem_conv_;
  BatchNorm2d stem_bn_;
  MaxPool2d stem_pool_;
  Tensor stem_act_;
  std::array<std::vector<BasicBlock>, kNumLevels> levels_;
};

}  // namespace tntc
