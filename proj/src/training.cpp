// SPDX-License-Identifier: Apache-2.0
#include "tntc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "tntc/encoders.hpp"
#include "tntc/errors.hpp"

namespace tntc {

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.lr0 = 0.005;
  cfg.decay_every = 15;
  cfg.batch_size = 8;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("train.epochs must be positive");
  if (!(lr0 >= 0.0)) throw ConfigError("train.lr0 must be non-negative");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1)");
  if (decay_every <= 0) throw ConfigError("train.decay_every must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw ContractError("epoch must be non-negative");
  // Dividing by the integral factor 1/decay rounds once instead of
  // accumulating error in decay^k (1e-3 * 0.1^2 != 1e-5 in doubles).
  const int k = epoch / cfg.decay_every;
  const double inv = 1.0 / cfg.lr_decay;
  if (inv == std::round(inv)) return cfg.lr0 / std::pow(inv, k);
  return cfg.lr0 * std::pow(cfg.lr_decay, k);
}

void SgdMomentum::step(const std::vector<NamedParam>& params, double lr) {
  if (velocity_.empty())
    for (const auto& p : params) velocity_.push_back(Tensor::zeros_like(p.param->value));
  if (velocity_.size() != params.size()) throw ContractError("optimizer parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i].param->value;
    const Tensor& g = params[i].param->grad;
    Tensor& v = velocity_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j] + weight_decay_ * w[j];
      w[j] -= lr * v[j];
    }
  }
}

namespace {

void write_chw(const EncodedImage& img, double* dst) {
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < EncodedImage::channels; ++c)
        dst[c * plane + static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, c);
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

PreparedData prepare_inputs(const Dataset& data, int input_size, std::ostream* warnings) {
  if (input_size <= 0) throw ContractError("input size must be positive");
  const int n = static_cast<int>(data.size());
  PreparedData out;
  out.sji = Tensor({n, 3, input_size, input_size});
  out.afi = Tensor({n, 3, input_size, input_size});
  const std::size_t per = 3ull * input_size * input_size;
  const auto basis = ProjectionBasis::standard();
  for (int i = 0; i < n; ++i) {
    const GaitSequence padded = pad_by_duplication(data.samples[static_cast<std::size_t>(i)], kPaddedFrames, warnings);
    write_chw(resize_bilinear(encode_sji(padded), input_size, input_size), out.sji.data() + i * per);
    write_chw(resize_bilinear(encode_afi(padded, basis), input_size, input_size), out.afi.data() + i * per);
    out.labels.push_back(emotion_index(padded.label));
    out.ids.push_back(padded.id);
  }
  return out;
}

std::pair<Tensor, Tensor> gather_batch(const PreparedData& data, const std::vector<int>& indices) {
  const int s = data.sji.dim(2);
  const std::size_t per = 3ull * s * s;
  const int n = static_cast<int>(indices.size());
  Tensor sji({n, 3, s, s}), afi({n, 3, s, s});
  for (int b = 0; b < n; ++b) {
    const auto src = static_cast<std::size_t>(indices[static_cast<std::size_t>(b)]) * per;
    std::copy_n(data.sji.data() + src, per, sji.data() + b * per);
    std::copy_n(data.afi.data() + src, per, afi.data() + b * per);
  }
  return {std::move(sji), std::move(afi)};
}

void write_train_log(const TrainLog& log, std::ostream& out) {
  char buf[256];
  for (const auto& r : log.epochs) {
    std::snprintf(buf, sizeof buf, "{\"epoch\":%d,\"lr\":%.10g,\"loss\":%.10g,\"train_acc\":%.10g}\n", r.epoch, r.lr, r.loss,
                  r.train_acc);
    out << buf;
  }
}

TrainLog train(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices, const TrainConfig& cfg,
               int max_steps, const EpochCallback& on_epoch) {
  cfg.validate();
  std::vector<int> order = indices.empty() ? all_indices(data.size()) : indices;
  if (order.empty()) throw ContractError("refusing to train on an empty dataset");

  Rng shuffle_rng(cfg.seed ^ 0x5EEDF00DULL);
  SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  const auto params = model.parameters();
  TrainLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (max_steps > 0 && log.steps >= max_steps) break;
    const double lr = lr_at_epoch(cfg, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0, correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      if (max_steps > 0 && log.steps >= max_steps) break;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      for (int i : batch) labels.push_back(data.labels[static_cast<std::size_t>(i)]);
      auto [sji, afi] = gather_batch(data, batch);

      model.zero_grad();
      const Tensor logits = model.forward(sji, afi, Mode::train);
      const LossResult lr_res = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(lr_res.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << log.steps << " (batch of " << batch.size()
            << ", first id '" << data.ids[static_cast<std::size_t>(batch.front())] << "', lr " << lr << ")";
        throw NumericError(msg.str());
      }
      model.backward(lr_res.grad);
      opt.step(params, lr);
      ++log.steps;

      const auto probs = probabilities_from_logits(logits);
      for (std::size_t b = 0; b < batch.size(); ++b)
        correct += emotion_index(probs[b].predicted) == labels[b] ? 1 : 0;
      loss_sum += lr_res.loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    if (seen == 0) break;
    EpochRecord rec{epoch, lr, loss_sum / static_cast<double>(seen), static_cast<double>(correct) / static_cast<double>(seen)};
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return log;
}

Evaluation evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw ContractError("prediction and label counts differ");
  if (truth.empty()) throw ContractError("accuracy is undefined on an empty set");
  Evaluation ev;
  ev.n_samples = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= kNumEmotions || p < 0 || p >= kNumEmotions) throw ContractError("label out of range");
    ++ev.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    ev.n_correct += t == p ? 1 : 0;
  }
  ev.accuracy = static_cast<double>(ev.n_correct) / static_cast<double>(ev.n_samples);
  return ev;
}

std::vector<ClassProbabilities> predict(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices,
                                        int batch_size) {
  const std::vector<int> order = indices.empty() ? all_indices(data.size()) : indices;
  std::vector<ClassProbabilities> out;
  out.reserve(order.size());
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    auto [sji, afi] = gather_batch(data, batch);
    for (auto& p : probabilities_from_logits(model.forward(sji, afi, Mode::eval))) out.push_back(p);
  }
  return out;
}

Evaluation evaluate_accuracy(TwoStreamNetwork& model, const PreparedData& data, const std::vector<int>& indices) {
  const std::vector<int> order = indices.empty() ? all_indices(data.size()) : indices;
  if (order.empty()) throw ContractError("accuracy is undefined on an empty set");
  std::vector<int> predicted, truth;
  for (const auto& p : predict(model, data, order)) predicted.push_back(emotion_index(p.predicted));
  for (int i : order) truth.push_back(data.labels[static_cast<std::size_t>(i)]);
  return evaluate_predictions(predicted, truth);
}

FoldReport FoldReport::aggregate(const std::vector<Evaluation>& folds) {
  FoldReport r;
  if (folds.empty()) return r;
  for (const auto& f : folds) {
    r.per_fold_accuracy.push_back(f.accuracy);
    for (std::size_t i = 0; i < kNumEmotions; ++i)
      for (std::size_t j = 0; j < kNumEmotions; ++j) r.confusion[i][j] += f.confusion[i][j];
  }
  const double k = static_cast<double>(folds.size());
  r.mean = std::accumulate(r.per_fold_accuracy.begin(), r.per_fold_accuracy.end(), 0.0) / k;
  double var = 0.0;
  for (double a : r.per_fold_accuracy) var += (a - r.mean) * (a - r.mean);
  r.std = std::sqrt(var / k);
  return r;
}

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f(%.2f)", 100.0 * mean, 100.0 * std);
  return buf;
}

std::string FoldReport::render() const { return format_mean_std(mean, std); }

FoldReport cross_validate(const PreparedData& data, const ExperimentConfig& cfg, const FoldCallback& on_fold) {
  cfg.train.validate();
  if (data.size() == 0) throw ContractError("refusing to cross-validate an empty dataset");
  const auto folds = stratified_kfold_split(data.labels, cfg.folds, cfg.split_seed);
  std::vector<Evaluation> results;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& split = folds[f];
    std::set<int> test(split.test.begin(), split.test.end());
    for (int i : split.train)
      if (test.count(i)) throw ContractError("fold " + std::to_string(f) + " leaks sample " + std::to_string(i));
    TwoStreamNetwork model(cfg.network, cfg.train.ablation, cfg.train.seed + 1000003ULL * f);
    const auto log = train(model, data, split.train, cfg.train, cfg.max_steps);
    results.push_back(evaluate_accuracy(model, data, split.test));
    if (on_fold) on_fold({static_cast<int>(f), split, log, results.back()});
  }
  return FoldReport::aggregate(results);
}

std::vector<Ablation> ablation_variants() {
  return {Ablation::no_tcm(),        Ablation::affective_only(), Ablation::joint_only(),   Ablation::tcm_prefix(1),
          Ablation::tcm_prefix(2),   Ablation::tcm_prefix(3),    Ablation::tcm_prefix(4)};
}

std::string ablation_row_label(const Ablation& a) {
  switch (a.kind) {
    case Ablation::Kind::no_tcm: return "Baseline (w/o TCMs)";
    case Ablation::Kind::affective_only: return "Baseline w/o joint stream";
    case Ablation::Kind::joint_only: return "Baseline w/o affective stream";
    case Ablation::Kind::full: return "Baseline + TCM levels 1-4";
    case Ablation::Kind::tcm_levels_prefix: {
      std::string s = "Baseline + TCM levels 1";
      if (a.prefix > 1) s += "-" + std::to_string(a.prefix);
      return s;
    }
  }
  return a.name();
}

std::vector<AblationRow> run_ablation_suite(const PreparedData& data, const ExperimentConfig& base, const AblationCallback& on_row) {
  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants()) {
    ExperimentConfig cfg = base;
    cfg.train.ablation = variant;
    rows.push_back({ablation_row_label(variant), variant, cross_validate(data, cfg)});
    if (on_row) on_row(rows.back());
  }
  return rows;
}

std::string render_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-32s %-4s %-4s %-4s %-4s %s\n", "Method", "L1", "L2", "L3", "L4", "Accuracy %");
  os << buf;
  for (const auto& r : rows) {
    const bool prefix = r.ablation.kind == Ablation::Kind::tcm_levels_prefix || r.ablation.kind == Ablation::Kind::full;
    std::string marks[kNumLevels];
    for (int l = 1; l <= kNumLevels; ++l) marks[l - 1] = prefix ? (r.ablation.tcm_at(l) ? "x" : "") : "-";
    std::snprintf(buf, sizeof buf, "%-32s %-4s %-4s %-4s %-4s %s\n", r.name.c_str(), marks[0].c_str(), marks[1].c_str(),
                  marks[2].c_str(), marks[3].c_str(), r.report.render().c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace tntc
