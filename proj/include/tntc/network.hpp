// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tntc/backbone.hpp"
#include "tntc/head.hpp"
#include "tntc/tcm.hpp"

namespace tntc {

/// Which parts of the two-stream network are instantiated.
struct Ablation {
  enum class Kind { full, no_tcm, joint_only, affective_only, tcm_levels_prefix };
  Kind kind = Kind::full;
  /// Number of leading levels with a TCM; only used by tcm_levels_prefix.
  int prefix = kNumLevels;

  static Ablation full() { return {}; }
  static Ablation no_tcm() { return {Kind::no_tcm, 0}; }
  static Ablation joint_only() { return {Kind::joint_only, 0}; }
  static Ablation affective_only() { return {Kind::affective_only, 0}; }
  static Ablation tcm_prefix(int k);

  bool has_joint() const { return kind != Kind::affective_only; }
  bool has_affective() const { return kind != Kind::joint_only; }
  bool tcm_at(int level) const;
  int tcm_count() const;

  /// "full", "no_tcm", "joint_only", "affective_only" or "tcm_levels_prefix(k)".
  std::string name() const;
  static Ablation parse(const std::string& text);

  bool operator==(const Ablation&) const = default;
};

struct NetworkConfig {
  BackboneConfig backbone;
  int tcm_depth = 2;
  int tcm_heads = 4;
  double tcm_mlp_ratio = 4.0;
  HeadConfig head;

  static NetworkConfig paper();
  static NetworkConfig reduced();
  void validate() const;
  TcmConfig tcm_config(int level) const;
};

/// Shapes observed during the last forward pass, [C, H, W] per level and
/// stream (empty when the stream is absent).
struct ForwardTrace {
  std::array<std::vector<int>, kNumLevels> joint;
  std::array<std::vector<int>, kNumLevels> affective;
  std::array<int, kNumLevels> tcm_tokens{};
  int head_input = 0;
};

/// Two non-weight-sharing backbones exchanging information through
/// per-level TCMs, followed by pooled fusion and the MLP head.
class TwoStreamNetwork {
 public:
  TwoStreamNetwork(const NetworkConfig& cfg, const Ablation& ablation, std::uint64_t seed);

  TwoStreamNetwork(const TwoStreamNetwork&) = delete;
  TwoStreamNetwork& operator=(const TwoStreamNetwork&) = delete;
  TwoStreamNetwork(TwoStreamNetwork&&) = default;
  TwoStreamNetwork& operator=(TwoStreamNetwork&&) = default;

  /// Images are [N, 3, S, S]; an absent stream's input is ignored.
  Tensor forward(const Tensor& sji, const Tensor& afi, Mode mode);
  /// Accumulates parameter gradients for the last forward.
  void backward(const Tensor& grad_logits);

  std::vector<NamedParam> parameters();
  std::vector<NamedBuffer> buffers();
  void zero_grad();

  const NetworkConfig& config() const { return cfg_; }
  const Ablation& ablation() const { return ablation_; }
  std::uint64_t seed() const { return seed_; }
  const ForwardTrace& trace() const { return trace_; }

  StreamBackbone* stream(Stream s);
  Tcm* tcm(int level);
  ClassifierHead& head() { return head_; }

 private:
  void collect(Collector& c);

  NetworkConfig cfg_;
  Ablation ablation_;
  std::uint64_t seed_;
  std::optional<StreamBackbone> joint_, affective_;
  std::array<std::optional<Tcm>, kNumLevels> tcms_;
  ClassifierHead head_;
  ForwardTrace trace_;
  std::vector<int> last_joint_shape_, last_affective_shape_;
};

}  // namespace tntc
