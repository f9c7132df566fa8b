// SPDX-License-Identifier: Apache-2.0
#include "tntc/head.hpp"

#include <cmath>

#include "tntc/errors.hpp"

namespace tntc {

Emotion argmax_emotion(std::span<const double> probs) {
  if (probs.size() != static_cast<std::size_t>(kNumEmotions)) throw ContractError("expected 4 class scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return static_cast<Emotion>(best);
}

Tensor fuse_streams(const Tensor& v_joint, const Tensor& v_affective) {
  if (v_joint.shape() != v_affective.shape())
    throw ContractError("fuse: length mismatch " + v_joint.shape_string() + " vs " + v_affective.shape_string());
  Tensor out = v_joint;
  out += v_affective;
  return out;
}

ClassifierHead::ClassifierHead(int in_features, const HeadConfig& cfg, Rng& rng) {
  if (cfg.hidden1 <= 0 || cfg.hidden2 <= 0) throw ConfigError("head hidden widths must be positive");
  fc1_ = Linear(in_features, cfg.hidden1, rng, std::sqrt(2.0 / in_features));
  fc2_ = Linear(cfg.hidden1, cfg.hidden2, rng, std::sqrt(2.0 / cfg.hidden1));
  fc3_ = Linear(cfg.hidden2, kNumEmotions, rng);
}

Tensor ClassifierHead::forward(const Tensor& features) {
  h1_ = fc1_.forward(features);
  relu_inplace(h1_);
  h2_ = fc2_.forward(h1_);
  relu_inplace(h2_);
  return fc3_.forward(h2_);
}

Tensor ClassifierHead::backward(const Tensor& grad_logits) {
  Tensor g = fc3_.backward(grad_logits);
  relu_backward_inplace(g, h2_);
  g = fc2_.backward(g);
  relu_backward_inplace(g, h1_);
  return fc1_.backward(g);
}

void ClassifierHead::collect(Collector& c, const std::string& prefix) {
  fc1_.collect(c, prefix + ".fc1");
  fc2_.collect(c, prefix + ".fc2");
  fc3_.collect(c, prefix + ".fc3");
}

std::vector<ClassProbabilities> probabilities_from_logits(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) != kNumEmotions)
    throw ContractError("expected [N, 4] logits, got " + logits.shape_string());
  const Tensor p = softmax_rows(logits);
  std::vector<ClassProbabilities> out(static_cast<std::size_t>(logits.dim(0)));
  for (std::size_t b = 0; b < out.size(); ++b) {
    for (std::size_t k = 0; k < kNumEmotions; ++k) out[b].probs[k] = p[b * kNumEmotions + k];
    out[b].predicted = argmax_emotion(out[b].probs);
  }
  return out;
}

std::vector<ClassProbabilities> ClassifierHead::classify(const Tensor& features) {
  return probabilities_from_logits(forward(features));
}

}  // namespace tntc
