// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tntc/checkpoint.hpp"
#include "tntc/config.hpp"
#include "tntc/errors.hpp"
#include "tntc/training.hpp"

using namespace tntc;

namespace {

TrainConfig quick_train() {
  auto t = TrainConfig::desk();
  t.epochs = 1;
  t.batch_size = 4;
  return t;
}

NetworkConfig tiny_network() {
  auto n = NetworkConfig::reduced();
  n.backbone.input_size = 32;
  return n;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  const auto cfg = TrainConfig::paper();
  CHECK(lr_at_epoch(cfg, 0) == 1e-3);
  CHECK(lr_at_epoch(cfg, 74) == 1e-3);
  CHECK(lr_at_epoch(cfg, 75) == 1e-4);
  CHECK(lr_at_epoch(cfg, 150) == 1e-5);
  CHECK(lr_at_epoch(cfg, 225) == 1e-6);
  auto fractional = cfg;
  fractional.lr_decay = 0.3;
  CHECK(lr_at_epoch(fractional, 150) == doctest::Approx(1e-3 * 0.09).epsilon(1e-15));
  for (int e = 1; e < 300; ++e) CHECK(lr_at_epoch(cfg, e) <= lr_at_epoch(cfg, e - 1));
}

TEST_CASE("momentum SGD against the closed-form recurrence") {
  // f(w) = 0.5 (a w0^2 + b w1^2)
  const double a = 3.0, b = 0.5, lr = 0.1, mu = 0.9, wd = 0.01;
  Param p(Tensor({2}, {1.0, -2.0}));
  std::vector<NamedParam> params = {{"w", &p}};
  SgdMomentum opt(mu, wd);
  double w0 = 1.0, w1 = -2.0, v0 = 0, v1 = 0;
  for (int step = 0; step < 3; ++step) {
    p.grad[0] = a * p.value[0];
    p.grad[1] = b * p.value[1];
    opt.step(params, lr);
    v0 = mu * v0 + a * w0 + wd * w0;
    v1 = mu * v1 + b * w1 + wd * w1;
    w0 -= lr * v0;
    w1 -= lr * v1;
    CHECK(std::abs(p.value[0] - w0) <= 1e-9);
    CHECK(std::abs(p.value[1] - w1) <= 1e-9);
  }
}

TEST_CASE("evaluate_predictions") {
  CHECK(evaluate_predictions({0, 1, 2, 3, 0}, {0, 1, 2, 3, 1}).accuracy == 0.8);
  const auto all = evaluate_predictions({0, 1, 2, 3}, {0, 1, 2, 3});
  CHECK(all.accuracy == 1.0);
  std::vector<int> truth, happy;
  for (int i = 0; i < 40; ++i) truth.push_back(i % 4), happy.push_back(0);
  const auto ev = evaluate_predictions(happy, truth);
  CHECK(ev.accuracy == 0.25);
  CHECK(ev.confusion[1][0] == 10);
  CHECK(ev.confusion[0][0] == 10);
  CHECK_THROWS_AS(evaluate_predictions({}, {}), ContractError);
}

TEST_CASE("fold report aggregation and rendering") {
  std::vector<Evaluation> folds(5);
  for (auto& f : folds) f.accuracy = 0.8;
  const auto r = FoldReport::aggregate(folds);
  CHECK(r.mean == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.std == doctest::Approx(0.0));
  CHECK(format_mean_std(0.8597, 0.0075) == "85.97(0.75)");
  CHECK(r.render() == "80.00(0.00)");
}

TEST_CASE("training") {
  const auto data = prepare_inputs(synthesize_dataset(2, 60, 1), 32);
  CHECK(data.sji.shape() == std::vector<int>{8, 3, 32, 32});
  CHECK(data.ids[1] == "syn-1-0");

  SUBCASE("zero learning rate leaves parameters unchanged") {
    TwoStreamNetwork model(tiny_network(), Ablation::full(), 1);
    std::vector<double> before;
    for (auto& p : model.parameters()) before.insert(before.end(), p.param->value.values().begin(), p.param->value.values().end());
    auto cfg = quick_train();
    cfg.lr0 = 0.0;
    train(model, data, {}, cfg);
    std::vector<double> after;
    for (auto& p : model.parameters()) after.insert(after.end(), p.param->value.values().begin(), p.param->value.values().end());
    CHECK(before == after);
  }
  SUBCASE("same config and seed give the same loss") {
    TwoStreamNetwork a(tiny_network(), Ablation::full(), 2), b(tiny_network(), Ablation::full(), 2);
    const auto la = train(a, data, {}, quick_train());
    const auto lb = train(b, data, {}, quick_train());
    CHECK(std::abs(la.epochs.back().loss - lb.epochs.back().loss) <= 1e-6);
    CHECK(la.steps == 2);
    std::ostringstream log;
    write_train_log(la, log);
    const auto rec = nlohmann::json::parse(log.str().substr(0, log.str().find('\n')));
    CHECK(rec.contains("epoch"));
    CHECK(rec.contains("lr"));
    CHECK(rec.contains("loss"));
    CHECK(rec.contains("train_acc"));
  }
  SUBCASE("max_steps caps optimizer steps") {
    TwoStreamNetwork m(tiny_network(), Ablation::no_tcm(), 2);
    auto cfg = quick_train();
    cfg.epochs = 5;
    CHECK(train(m, data, {}, cfg, 3).steps == 3);
  }
  SUBCASE("empty training set is refused") {
    TwoStreamNetwork m(tiny_network(), Ablation::full(), 2);
    CHECK_THROWS_AS(train(m, PreparedData{}, {}, quick_train()), ContractError);
  }
  SUBCASE("diverging loss is a numeric error") {
    TwoStreamNetwork m(tiny_network(), Ablation::full(), 2);
    auto cfg = quick_train();
    cfg.lr0 = 1e30;
    cfg.epochs = 3;
    CHECK_THROWS_AS(train(m, data, {}, cfg), NumericError);
  }
}

TEST_CASE("cross-validation is deterministic and leak-free") {
  const auto data = prepare_inputs(synthesize_dataset(5, 60, 2), 32);
  ExperimentConfig cfg;
  cfg.network = tiny_network();
  cfg.train = quick_train();
  cfg.max_steps = 1;
  int folds_seen = 0;
  const auto a = cross_validate(data, cfg, [&](const FoldOutcome& f) {
    ++folds_seen;
    CHECK(f.evaluation.n_samples == 4);
    CHECK(f.split.train.size() == 16);
    CHECK(f.log.steps == 1);
  });
  const auto b = cross_validate(data, cfg);
  CHECK(folds_seen == 5);
  CHECK(a.per_fold_accuracy == b.per_fold_accuracy);
  int total = 0;
  for (const auto& row : a.confusion)
    for (int v : row) total += v;
  CHECK(total == 20);
}

TEST_CASE("ablation suite structure") {
  const auto variants = ablation_variants();
  REQUIRE(variants.size() == 7);
  CHECK(variants[0] == Ablation::no_tcm());
  CHECK(variants[6] == Ablation::tcm_prefix(4));
  std::set<std::string> labels;
  for (const auto& v : variants) labels.insert(ablation_row_label(v));
  CHECK(labels.size() == 7);
}

TEST_CASE("run configuration parsing") {
  SUBCASE("missing dataset names the key") {
    try {
      parse_run_config(nlohmann::json::object());
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("dataset") != std::string::npos);
    }
  }
  SUBCASE("every bad key is listed") {
    const auto doc = nlohmann::json::parse(R"({"dataset": "x.csv", "folds": 0, "bogus": 1, "train": {"lr0": "fast"}})");
    try {
      parse_run_config(doc);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("folds") != std::string::npos);
      CHECK(msg.find("bogus") != std::string::npos);
      CHECK(msg.find("train.lr0") != std::string::npos);
    }
  }
  SUBCASE("profiles and overrides") {
    const auto doc = nlohmann::json::parse(R"({"dataset": "x.bin", "profile": "paper"})");
    const auto cfg = parse_run_config(doc, {.seed = 9, .profile = std::nullopt});
    CHECK(cfg.profile == Profile::paper);
    CHECK(cfg.experiment.train.epochs == 300);
    CHECK(cfg.experiment.network.backbone.input_size == 224);
    CHECK(cfg.experiment.train.seed == 9);
    CHECK(cfg.resolved_format() == DataFormat::binary);
    const auto desk = parse_run_config(doc, {.seed = std::nullopt, .profile = Profile::desk});
    CHECK(desk.experiment.network.backbone.input_size == 64);
  }
  SUBCASE("snapshot round-trips") {
    const auto doc = nlohmann::json::parse(R"({"dataset": "x.csv", "seed": 4, "train": {"ablation": "joint_only"}})");
    const auto cfg = parse_run_config(doc);
    const auto again = parse_run_config(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));
    CHECK(again.experiment.train.ablation == Ablation::joint_only());
  }
}

TEST_CASE("checkpoint round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "tntc_test_ckpt.bin";
  TwoStreamNetwork model(tiny_network(), Ablation::tcm_prefix(2), 77);
  save_checkpoint(model, path, {{"note", "x"}});
  const auto header = read_checkpoint_header(path);
  CHECK(header.at("ablation") == "tcm_levels_prefix(2)");
  CHECK(header.at("seed") == 77);
  auto back = load_checkpoint(path);
  CHECK(back.ablation() == Ablation::tcm_prefix(2));
  const auto pa = model.parameters(), pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i].param->value.size(); ++k)
      CHECK(pb[i].param->value[k] == static_cast<float>(pa[i].param->value[k]));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
