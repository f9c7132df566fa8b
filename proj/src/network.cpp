// SPDX-License-Identifier: Apache-2.0
#include "tntc/network.hpp"

#include <regex>

#include "tntc/errors.hpp"

namespace tntc {

Ablation Ablation::tcm_prefix(int k) {
  if (k < 1 || k > kNumLevels) throw ConfigError("tcm_levels_prefix must be 1..4, got " + std::to_string(k));
  return {Kind::tcm_levels_prefix, k};
}

bool Ablation::tcm_at(int level) const {
  switch (kind) {
    case Kind::full: return true;
    case Kind::tcm_levels_prefix: return level <= prefix;
    default: return false;
  }
}

int Ablation::tcm_count() const {
  int n = 0;
  for (int l = 1; l <= kNumLevels; ++l) n += tcm_at(l) ? 1 : 0;
  return n;
}

std::string Ablation::name() const {
  switch (kind) {
    case Kind::full: return "full";
    case Kind::no_tcm: return "no_tcm";
    case Kind::joint_only: return "joint_only";
    case Kind::affective_only: return "affective_only";
    case Kind::tcm_levels_prefix: return "tcm_levels_prefix(" + std::to_string(prefix) + ")";
  }
  return "?";
}

Ablation Ablation::parse(const std::string& text) {
  if (text == "full") return full();
  if (text == "no_tcm") return no_tcm();
  if (text == "joint_only") return joint_only();
  if (text == "affective_only") return affective_only();
  static const std::regex prefix_re(R"(tcm_levels_prefix\((\d+)\))");
  std::smatch m;
  if (std::regex_match(text, m, prefix_re)) return tcm_prefix(std::stoi(m[1].str()));
  throw ConfigError("unknown ablation '" + text + "'");
}

NetworkConfig NetworkConfig::paper() { return {}; }

NetworkConfig NetworkConfig::reduced() {
  NetworkConfig cfg;
  cfg.backbone = BackboneConfig::reduced();
  return cfg;
}

void NetworkConfig::validate() const {
  backbone.validate();
  if (tcm_depth <= 0) throw ConfigError("network.tcm_depth must be positive");
  if (tcm_heads <= 0) throw ConfigError("network.tcm_heads must be positive");
  if (!(tcm_mlp_ratio > 0.0)) throw ConfigError("network.tcm_mlp_ratio must be positive");
  if (head.hidden1 <= 0 || head.hidden2 <= 0) throw ConfigError("network.head_hidden must be positive");
  for (int l = 1; l <= kNumLevels; ++l) tcm_config(l).validate();
}

TcmConfig NetworkConfig::tcm_config(int level) const {
  return TcmConfig::for_level(level, backbone.level_width(level), tcm_depth, tcm_heads, tcm_mlp_ratio);
}

TwoStreamNetwork::TwoStreamNetwork(const NetworkConfig& cfg, const Ablation& ablation, std::uint64_t seed)
    : cfg_(cfg), ablation_(ablation), seed_(seed) {
  cfg_.validate();
  Rng rng(seed);
  if (ablation_.has_joint()) joint_.emplace(cfg_.backbone, rng);
  if (ablation_.has_affective()) affective_.emplace(cfg_.backbone, rng);
  for (int l = 1; l <= kNumLevels; ++l)
    if (ablation_.tcm_at(l)) tcms_[static_cast<std::size_t>(l - 1)].emplace(cfg_.tcm_config(l), cfg_.backbone.level_size(l), rng);
  head_ = ClassifierHead(cfg_.backbone.level_width(kNumLevels), cfg_.head, rng);
}

StreamBackbone* TwoStreamNetwork::stream(Stream s) {
  auto& opt = s == Stream::joint ? joint_ : affective_;
  return opt ? &*opt : nullptr;
}

Tcm* TwoStreamNetwork::tcm(int level) {
  if (level < 1 || level > kNumLevels) throw ContractError("level must be 1..4");
  auto& opt = tcms_[static_cast<std::size_t>(level - 1)];
  return opt ? &*opt : nullptr;
}

namespace {
std::vector<int> chw(const Tensor& t) { return {t.dim(1), t.dim(2), t.dim(3)}; }
}  // namespace

Tensor TwoStreamNetwork::forward(const Tensor& sji, const Tensor& afi, Mode mode) {
  trace_ = ForwardTrace{};
  Tensor xj, xa;
  if (joint_) xj = sji;
  if (affective_) xa = afi;
  if (joint_ && affective_ && sji.shape() != afi.shape())
    throw ContractError("SJI and AFI batches differ: " + sji.shape_string() + " vs " + afi.shape_string());
  for (int l = 1; l <= kNumLevels; ++l) {
    const auto ul = static_cast<std::size_t>(l - 1);
    if (joint_) xj = joint_->forward_level(xj, l, mode);
    if (affective_) xa = affective_->forward_level(xa, l, mode);
    if (auto& t = tcms_[ul]) {
      std::tie(xj, xa) = t->forward(xj, xa);
      trace_.tcm_tokens[ul] = t->token_count();
    }
    if (joint_) trace_.joint[ul] = chw(xj);
    if (affective_) trace_.affective[ul] = chw(xa);
  }
  Tensor pooled;
  if (joint_) {
    last_joint_shape_ = xj.shape();
    pooled = global_average_pool(xj);
  }
  if (affective_) {
    last_affective_shape_ = xa.shape();
    Tensor pa = global_average_pool(xa);
    pooled = joint_ ? fuse_streams(pooled, pa) : std::move(pa);
  }
  trace_.head_input = pooled.dim(1);
  return head_.forward(pooled);
}

void TwoStreamNetwork::backward(const Tensor& grad_logits) {
  const Tensor g_pooled = head_.backward(grad_logits);
  Tensor gj, ga;
  if (joint_) gj = global_average_pool_backward(g_pooled, last_joint_shape_);
  if (affective_) ga = global_average_pool_backward(g_pooled, last_affective_shape_);
  for (int l = kNumLevels; l >= 1; --l) {
    if (auto& t = tcms_[static_cast<std::size_t>(l - 1)]) std::tie(gj, ga) = t->backward(gj, ga);
    if (joint_) gj = joint_->backward_level(gj, l);
    if (affective_) ga = affective_->backward_level(ga, l);
  }
}

void TwoStreamNetwork::collect(Collector& c) {
  if (joint_) joint_->collect(c, "joint");
  if (affective_) affective_->collect(c, "affective");
  for (int l = 1; l <= kNumLevels; ++l)
    if (auto& t = tcms_[static_cast<std::size_t>(l - 1)]) t->collect(c, "tcm" + std::to_string(l));
  head_.collect(c, "head");
}

std::vector<NamedParam> TwoStreamNetwork::parameters() {
  Collector c;
  collect(c);
  return std::move(c.params());
}

std::vector<NamedBuffer> TwoStreamNetwork::buffers() {
  Collector c;
  collect(c);
  return std::move(c.buffers());
}

void TwoStreamNetwork::zero_grad() {
  for (auto& p : parameters()) p.param->grad.fill(0.0);
}

}  // namespace tntc
