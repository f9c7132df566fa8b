// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tntc/gait_data.hpp"
#include "tntc/network.hpp"

namespace tntc {

struct TrainConfig {
  int epochs = 300;
  double lr0 = 1e-3;
  double lr_decay = 0.1;
  int decay_every = 75;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 64;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full();

  static TrainConfig paper() { return {}; }
  /// CPU-sized profile used with the reduced network.
  static TrainConfig desk();
  void validate() const;
};

/// lr0 · lr_decay^floor(epoch / decay_every).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// Classic momentum SGD with L2 weight decay folded into the gradient:
///   g = grad + wd·w;  v = μ·v + g;  w = w − lr·v
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::vector<NamedParam>& params, double lr);
  const std::vector<Tensor>& velocities() const { return velocity_; }

 private:
  double momentum_, weight_decay_;
  std::vector<Tensor> velocity_;
};

/// Network-ready encodings of a dataset: padded, encoded, resized.
struct PreparedData {
  Tensor sji;  // [N, 3, S, S]
  Tensor afi;  // [N, 3, S, S]
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
};

/// Pads to 240 frames, encodes SJI and AFI and resizes both to
/// `input_size`². Truncation warnings go to `warnings` if non-null.
PreparedData prepare_inputs(const Dataset& data, int input_size, std::ostream* warnings = nullptr);

/// Copies the images of `indices` into a batch.
std::pair<Tensor, Tensor> gather_batch(const PreparedData& data, const std::vector<int>& indices);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double train_acc = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int steps = 0;
};

/// Renders one JSON object per epoch.
void write_train_log(const TrainLog& log, std::ostream& out);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` on the samples listed in `indices` (all when empty).
/// `max_steps` > 0 stops after that many optimizer steps. Throws ContractError
/// on an empty training set and NumericError when the loss is not finite.
TrainLog train(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices,
               const TrainConfig& cfg, int max_steps = 0, const EpochCallback& on_epoch = {});

struct Evaluation {
  double accuracy = 0.0;
  std::array<std::array<int, kNumEmotions>, kNumEmotions> confusion{};  // [true][predicted]
  std::size_t n_correct = 0;
  std::size_t n_samples = 0;
};

/// n_correct / n_samples from predicted and true labels.
Evaluation evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& truth);

std::vector<ClassProbabilities> predict(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices,
                                        int batch_size = 16);

/// Inference-mode accuracy over `indices` (all when empty).
Evaluation evaluate_accuracy(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices = {});

struct FoldReport {
  std::vector<double> per_fold_accuracy;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
  std::array<std::array<int, kNumEmotions>, kNumEmotions> confusion{};

  static FoldReport aggregate(const std::vector<Evaluation>& folds);
  /// "mean(std)" in percent with two decimals, e.g. "85.97(0.75)".
  std::string render() const;
};

std::string format_mean_std(double mean, double std);

struct ExperimentConfig {
  NetworkConfig network = NetworkConfig::reduced();
  TrainConfig train = TrainConfig::desk();
  int folds = 5;
  std::uint64_t split_seed = 0;
  /// Optional cap on optimizer steps per fold (0 = none).
  int max_steps = 0;
};

struct FoldOutcome {
  int index = 0;  // 0-based
  const FoldSplit& split;
  const TrainLog& log;
  const Evaluation& evaluation;
};

/// Called after each fold has been trained and evaluated.
using FoldCallback = std::function<void(const FoldOutcome&)>;

/// Stratified k-fold protocol: a fresh model per fold trained on the train
/// indices and evaluated on the held-out fold. Throws ContractError if a
/// fold's train and test sets intersect.
FoldReport cross_validate(const PreparedData& data, const ExperimentConfig& cfg, const FoldCallback& on_fold = {});

struct AblationRow {
  std::string name;
  Ablation ablation;
  FoldReport report;
};

/// The seven ablation variants in table order: baseline, w/o joint stream,
/// w/o affective stream, TCMs at levels 1, 1–2, 1–3 and 1–4.
std::vector<Ablation> ablation_variants();
std::string ablation_row_label(const Ablation& a);

using AblationCallback = std::function<void(const AblationRow&)>;

/// Runs every variant under the same split seed.
std::vector<AblationRow> run_ablation_suite(const PreparedData& data, const ExperimentConfig& base,
                                            const AblationCallback& on_row = {});

std::string render_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace tntc
