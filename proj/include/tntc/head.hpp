// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "tntc/gait_data.hpp"
#include "tntc/nn.hpp"

namespace tntc {

struct ClassProbabilities {
  std::array<double, kNumEmotions> probs{};
  Emotion predicted = Emotion::happy;
};

/// Argmax with lowest-index tie-break.
Emotion argmax_emotion(std::span<const double> probs);

/// Element-wise sum of two pooled stream vectors ([N, C] or [C]).
Tensor fuse_streams(const Tensor& v_joint, const Tensor& v_affective);

struct HeadConfig {
  int hidden1 = 256;
  int hidden2 = 64;
};

/// Two-hidden-layer ReLU MLP producing emotion logits from a fused vector.
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(int in_features, const HeadConfig& cfg, Rng& rng);

  /// [N, C] -> [N, 4] logits.
  Tensor forward(const Tensor& features);
  Tensor backward(const Tensor& grad_logits);
  void collect(Collector& c, const std::string& prefix);

  /// Softmax probabilities and predictions for a [N, C] batch.
  std::vector<ClassProbabilities> classify(const Tensor& features);

  Linear& output_layer() { return fc3_; }
  int in_features() const { return fc1_.in_features(); }

 private:
  Linear fc1_, fc2_, fc3_;
  Tensor h1_, h2_;
};

std::vector<ClassProbabilities> probabilities_from_logits(const Tensor& logits);

}  // namespace tntc
