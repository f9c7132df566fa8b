// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion.
//
//   tntc_acceptance --cli PATH [--work DIR] [--only N]...
#include <zlib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "tntc/encoders.hpp"
#include "tntc/network.hpp"
#include "tntc/training.hpp"

using namespace tntc;
using namespace tntc::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const double kPi = std::acos(-1.0);

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!ok) notes.push_back("FAILED " + what);
  }
  void info(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Context {
  fs::path cli;
  fs::path work;
};

int run_cli(const Context& ctx, const std::string& args) {
  const std::string cmd = "\"" + ctx.cli.string() + "\" --quiet " + args + " 2>>\"" + (ctx.work / "cli.log").string() + "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// ------------------------------------------------------------------ 1

Outcome encoding_oracle(const Context&) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto seq = random_sequence(1000 + seed);
    const auto sji = encode_sji(seq);
    const auto afi = encode_afi(seq);
    const auto ref_j = naive_sji(seq);
    const auto ref_a = naive_afi(seq);
    o.expect(sji.pixels.size() == ref_j.size() && sji.height == 240 && sji.width == 16, "SJI shape [240,16,3]");
    o.expect(afi.pixels.size() == ref_a.size() && afi.height == 240 && afi.width == 16, "AFI shape [240,16,3]");
    for (std::size_t i = 0; i < ref_j.size(); ++i) {
      worst = std::max(worst, std::abs(sji.pixels[i] - ref_j[i]));
      worst = std::max(worst, std::abs(afi.pixels[i] - ref_a[i]));
    }
  }
  const double secs = seconds_since(t0);
  o.expect(worst <= 1e-9, "max abs diff <= 1e-9");
  o.expect(secs < 30, "runtime < 30 s");
  o.info("100 sequences, max abs diff " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s");
  return o;
}

// ------------------------------------------------------------------ 2

Outcome projection_properties(const Context&) {
  Outcome o;
  const auto basis = ProjectionBasis::standard(1e-6);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> expo(-8, 8);
  auto coord = [&] {
    // Mixed magnitudes, including exact zeros and values near -eps.
    const double r = u(rng);
    if (r > 0.9) return 0.0;
    if (r < -0.9) return -1e-6;
    return std::copysign(std::pow(10.0, expo(rng)), u(rng));
  };

  int range_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const Joint p{coord(), coord(), coord()};
    for (int plane = 1; plane <= 3; ++plane) {
      const double a = projection_angle(p, basis, plane);
      if (!(a > -kPi / 2 && a < kPi / 2)) ++range_fail;
    }
  }
  o.expect(range_fail == 0, "angles strictly inside (-pi/2, pi/2)");

  int trans_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const Joint p{coord(), coord(), coord()};
    const double c = 100 * u(rng);
    trans_fail += projection_angle({p.x, p.y, p.z + c}, basis, 1) != projection_angle(p, basis, 1);
    trans_fail += projection_angle({p.x, p.y + c, p.z}, basis, 2) != projection_angle(p, basis, 2);
    trans_fail += projection_angle({p.x + c, p.y, p.z}, basis, 3) != projection_angle(p, basis, 3);
  }
  o.expect(trans_fail == 0, "translation along e3/e2/e1 leaves plane 1/2/3 angle unchanged");

  double worst_scale = 0;
  int tested = 0;
  while (tested < 1000) {
    const Joint p{10 * u(rng), 10 * u(rng), 10 * u(rng)};
    const double s = std::pow(10.0, 2 * u(rng));
    const Joint q{s * p.x, s * p.y, s * p.z};
    const int plane = 1 + tested % 3;
    const double xp = plane == 3 ? p.y : p.x;
    if (std::abs(xp) < 1e-2 || std::abs(s * xp) < 1e-2) continue;
    worst_scale = std::max(worst_scale, std::abs(projection_angle(q, basis, plane) - projection_angle(p, basis, plane)));
    ++tested;
  }
  o.expect(worst_scale < 1e-4, "scale covariance within 1e-4");
  o.info("range violations " + std::to_string(range_fail) + ", translation mismatches " + std::to_string(trans_fail) +
         ", worst scale deviation " + fmt("%.3g", worst_scale));
  return o;
}

// ------------------------------------------------------------------ 3

struct ShapeRow {
  int c, h, w, tokens;
};

void check_shapes(Outcome& o, const NetworkConfig& cfg, const std::array<ShapeRow, 4>& table, int head_in,
                  const std::string& label) {
  TwoStreamNetwork net(cfg, Ablation::full(), 0);
  const int s = cfg.backbone.input_size;
  const auto sji = random_tensor({1, 3, s, s}, 1, 0, 1);
  const auto afi = random_tensor({1, 3, s, s}, 2, 0, 1);
  const auto logits = net.forward(sji, afi, Mode::eval);
  const auto& tr = net.trace();
  for (int l = 0; l < 4; ++l) {
    const auto& row = table[static_cast<std::size_t>(l)];
    const std::vector<int> expected{row.c, row.h, row.w};
    o.expect(tr.joint[static_cast<std::size_t>(l)] == expected,
             label + " joint level " + std::to_string(l + 1) + " shape " + shape_to_string(expected));
    o.expect(tr.affective[static_cast<std::size_t>(l)] == expected,
             label + " affective level " + std::to_string(l + 1) + " shape " + shape_to_string(expected));
    o.expect(tr.tcm_tokens[static_cast<std::size_t>(l)] == row.tokens,
             label + " TCM level " + std::to_string(l + 1) + " tokens " + std::to_string(row.tokens));
  }
  o.expect(tr.head_input == head_in, label + " head input " + std::to_string(head_in));
  std::map<std::string, std::vector<int>> shapes;
  for (const auto& p : net.parameters()) shapes[p.name] = p.param->value.shape();
  o.expect(shapes["head.fc1.weight"] == std::vector<int>{256, head_in}, label + " head fc1 [256, C]");
  o.expect(shapes["head.fc2.weight"] == std::vector<int>{64, 256}, label + " head fc2 [64, 256]");
  o.expect(shapes["head.fc3.weight"] == std::vector<int>{4, 64}, label + " head fc3 [4, 64]");
  o.expect(logits.shape() == std::vector<int>{1, 4}, label + " logits [1, 4]");
}

Outcome shape_contract(const Context&) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  // Level l spatial side = input / 2^(l+1); TCM grid = side / scale, scale = 8/4/2/1.
  check_shapes(o, NetworkConfig::paper(),
               {{{64, 56, 56, 98}, {128, 28, 28, 98}, {256, 14, 14, 98}, {512, 7, 7, 98}}}, 512, "paper");
  const double paper_secs = seconds_since(t0);
  check_shapes(o, NetworkConfig::reduced(), {{{8, 16, 16, 8}, {16, 8, 8, 8}, {32, 4, 4, 8}, {64, 2, 2, 8}}}, 64,
               "reduced");
  const double secs = seconds_since(t0);
  o.expect(secs < 60, "runtime < 60 s");
  o.info("paper config build+forward " + fmt("%.1f", paper_secs) + " s, total " + fmt("%.1f", secs) + " s");
  return o;
}

// ------------------------------------------------------------------ 4

Outcome residual_identity(const Context&) {
  Outcome o;
  const auto cfg = NetworkConfig::paper();
  std::string detail;
  for (int level = 1; level <= 4; ++level) {
    Rng rng(static_cast<std::uint64_t>(level));
    const int size = cfg.backbone.level_size(level);
    Tcm tcm(cfg.tcm_config(level), size, rng);
    tcm.encoder().output_projection().weight().value.fill(0.0);
    tcm.encoder().output_projection().bias().value.fill(0.0);
    const int c = cfg.backbone.level_width(level);
    const auto fj = random_tensor({1, c, size, size}, 100 + level);
    const auto fa = random_tensor({1, c, size, size}, 200 + level);
    const auto [oj, oa] = tcm.forward(fj, fa);
    double worst = 0;
    for (std::size_t i = 0; i < fj.size(); ++i) worst = std::max({worst, std::abs(oj[i] - fj[i]), std::abs(oa[i] - fa[i])});

    // Zero tokens through the split path alone.
    const int g = tcm.grid_size();
    const auto [zj, za] = split_upsample_add(Tensor({1, 2 * g * g, c}), fj, fa);
    double split_worst = 0;
    for (std::size_t i = 0; i < fj.size(); ++i)
      split_worst = std::max({split_worst, std::abs(zj[i] - fj[i]), std::abs(za[i] - fa[i])});

    const double tol = tcm.config().scale == 1 ? 1e-7 : 1e-6;
    o.expect(worst <= tol && split_worst <= tol, "level " + std::to_string(level) + " identity within " + fmt("%.0e", tol));
    detail += "L" + std::to_string(level) + " " + fmt("%.2g", std::max(worst, split_worst)) + (level < 4 ? ", " : "");
  }
  o.info("max abs diff per level: " + detail);
  return o;
}

// ------------------------------------------------------------------ 5

Outcome gradient_checks(const Context&) {
  Outcome o;
  {
    Rng rng(11);
    TransformerEncoder enc(8, 2, 4, 32, rng);
    const auto x = random_tensor({1, 4, 8}, 1);
    const auto w = random_tensor({1, 4, 8}, 2);
    Collector c;
    enc.collect(c, "encoder");
    enc.forward(x);
    enc.backward(w);
    const auto r = check_gradients(c.params(), [&] { return weighted_sum(enc.forward(x), w); }, 200, 3);
    o.expect(r.checked >= 50 && r.worst_rel <= 1e-3, "transformer encoder");
    o.info("encoder " + std::to_string(r.checked) + " params, worst rel " + fmt("%.2e", r.worst_rel));
  }
  {
    Rng rng(12);
    const auto red = BackboneConfig::reduced();
    BasicBlock block(red.level_width(1), red.level_width(2), 2, false, rng);
    const auto x = random_tensor({2, red.level_width(1), 8, 8}, 4);
    const auto w = random_tensor({2, red.level_width(2), 4, 4}, 5);
    Collector c;
    block.collect(c, "block");
    block.forward(x, Mode::train);
    block.backward(w);
    const auto r = check_gradients(c.params(), [&] { return weighted_sum(block.forward(x, Mode::train), w); }, 200, 6);
    o.expect(r.checked >= 50 && r.worst_rel <= 1e-3, "reduced backbone block");
    o.info("block " + std::to_string(r.checked) + " params, worst rel " + fmt("%.2e", r.worst_rel));
  }
  {
    Rng rng(13);
    ClassifierHead head(64, HeadConfig{}, rng);
    const auto x = random_tensor({4, 64}, 7);
    const std::vector<int> labels = {0, 1, 2, 3};
    Collector c;
    head.collect(c, "head");
    head.backward(softmax_cross_entropy(head.forward(x), labels).grad);
    const auto r =
        check_gradients(c.params(), [&] { return softmax_cross_entropy(head.forward(x), labels).loss; }, 200, 8);
    o.expect(r.checked >= 50 && r.worst_rel <= 1e-3, "MLP head");
    o.info("head " + std::to_string(r.checked) + " params, worst rel " + fmt("%.2e", r.worst_rel));
  }
  return o;
}

// ------------------------------------------------------------------ 6

Outcome optimizer(const Context&) {
  Outcome o;
  // f(w) = 0.5 (a w0^2 + b w1^2); closed form: v1 = g0 + wd w0, w1 = w0 - lr v1.
  const double a = 2.0, b = 0.25, lr = 0.05, mu = 0.9, wd = 5e-4;
  Param p(Tensor({2}, {0.7, -1.3}));
  const std::vector<NamedParam> params{{"w", &p}};
  SgdMomentum opt(mu, wd);
  double w[2] = {0.7, -1.3}, v[2] = {0, 0};
  double worst = 0;
  for (int step = 0; step < 2; ++step) {
    p.grad[0] = a * p.value[0];
    p.grad[1] = b * p.value[1];
    opt.step(params, lr);
    const double g[2] = {a * w[0], b * w[1]};
    for (int i = 0; i < 2; ++i) {
      v[i] = mu * v[i] + g[i] + wd * w[i];
      w[i] -= lr * v[i];
      worst = std::max(worst, std::abs(p.value[static_cast<std::size_t>(i)] - w[i]));
    }
  }
  o.expect(worst <= 1e-9, "momentum step matches closed form");
  const auto cfg = TrainConfig::paper();
  const bool exact = lr_at_epoch(cfg, 0) == 1e-3 && lr_at_epoch(cfg, 75) == 1e-4 && lr_at_epoch(cfg, 150) == 1e-5 &&
                     lr_at_epoch(cfg, 225) == 1e-6;
  o.expect(exact, "lr schedule 1e-3/1e-4/1e-5/1e-6 at epochs 0/75/150/225");
  o.info("update error " + fmt("%.2g", worst) + ", lr at 0/75/150/225 = " + fmt("%.17g", lr_at_epoch(cfg, 0)) + "/" +
         fmt("%.17g", lr_at_epoch(cfg, 75)) + "/" + fmt("%.17g", lr_at_epoch(cfg, 150)) + "/" +
         fmt("%.17g", lr_at_epoch(cfg, 225)));
  return o;
}

// ------------------------------------------------------------------ 7

Outcome overfit(const Context&) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = prepare_inputs(synthesize_dataset(10, 240, 7), NetworkConfig::reduced().backbone.input_size);
  const auto cfg = TrainConfig::desk();
  auto run = [&] {
    TwoStreamNetwork model(NetworkConfig::reduced(), Ablation::full(), cfg.seed);
    const auto log = train(model, data, {}, cfg, 200);
    return std::make_tuple(log.steps, log.epochs.back().loss, evaluate_accuracy(model, data).accuracy);
  };
  const auto [steps, loss, acc] = run();
  const double secs = seconds_since(t0);
  const auto [steps2, loss2, acc2] = run();
  o.expect(steps <= 200, "at most 200 optimizer steps");
  o.expect(acc >= 0.95, "train accuracy >= 0.95");
  o.expect(secs <= 300, "runtime <= 5 min");
  o.expect(std::abs(loss - loss2) <= 1e-6 && acc == acc2 && steps == steps2, "identical rerun under the same seed");
  o.info("40 samples, " + std::to_string(steps) + " steps, train accuracy " + fmt("%.3f", acc) + " (eval mode), final loss " +
         fmt("%.4f", loss) + ", " + fmt("%.1f", secs) + " s per run");
  return o;
}

// ------------------------------------------------------------------ 8

Outcome cv_protocol(const Context&) {
  Outcome o;
  auto check = [&](const std::vector<int>& labels, const std::string& label) {
    const auto folds = stratified_kfold_split(labels, 5, 17);
    std::vector<int> seen(labels.size(), 0);
    bool leak = false, balanced = true;
    for (const auto& f : folds) {
      std::set<int> test(f.test.begin(), f.test.end());
      for (int i : f.train) leak |= test.count(i) > 0;
      for (int i : f.test) ++seen[static_cast<std::size_t>(i)];
    }
    for (int c = 0; c < kNumEmotions; ++c) {
      int lo = 1 << 30, hi = 0;
      for (const auto& f : folds) {
        int n = 0;
        for (int i : f.test) n += labels[static_cast<std::size_t>(i)] == c;
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      balanced &= hi - lo <= 1;
    }
    const bool covered = std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    o.expect(!leak, label + " no train/test leakage");
    o.expect(covered, label + " test folds partition the samples");
    o.expect(balanced, label + " per-class fold counts within 1");
  };
  std::vector<int> l20, l21, l2177;
  for (int i = 0; i < 20; ++i) l20.push_back(i % 4);
  l21 = l20;
  l21.push_back(1);
  std::mt19937_64 rng(2177);
  std::discrete_distribution<int> skew({0.3, 0.25, 0.2, 0.25});
  for (int i = 0; i < 2177; ++i) l2177.push_back(skew(rng));
  check(l20, "n=20");
  check(l21, "n=21");
  check(l2177, "n=2177");

  std::vector<Evaluation> evs(2);
  evs[0].accuracy = 0.8522;
  evs[1].accuracy = 0.8672;
  const std::string rendered = FoldReport::aggregate(evs).render();
  o.expect(rendered == "85.97(0.75)", "FoldReport renders mean(std) as 85.97(0.75)");
  o.expect(std::regex_match(format_mean_std(0.4, 0.05), std::regex(R"(\d+\.\d\d\(\d+\.\d\d\))")), "two-decimal format");
  o.info("sizes 20/21/2177 balanced and leak-free; render " + rendered);
  return o;
}

// ------------------------------------------------------------------ 9

void write_desk_config(const fs::path& path, const std::string& dataset) {
  std::ofstream(path) << json{{"dataset", dataset}, {"profile", "desk"}, {"seed", 1}, {"folds", 5}}.dump(2);
}

fs::path synthetic_dataset(const Context& ctx) {
  const auto dir = ctx.work / "data";
  if (!fs::exists(dir / "synthetic.csv") &&
      run_cli(ctx, "synthesize --per-class 10 --frames 240 --seed 7 --out \"" + dir.string() + "\"") != 0)
    return {};
  return dir / "synthetic.csv";
}

Outcome ablation_suite(const Context& ctx) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = synthetic_dataset(ctx);
  o.expect(!data.empty(), "synthesize command succeeds");
  if (data.empty()) return o;
  write_desk_config(ctx.work / "ablate.json", data.string());
  const auto out = ctx.work / "ablate";
  const int rc = run_cli(ctx, "ablate \"" + (ctx.work / "ablate.json").string() + "\" --out \"" + out.string() + "\"");
  o.expect(rc == 0, "ablate exits 0");
  if (rc != 0) return o;
  const auto result = read_json(out / "ablation.json");
  const auto& rows = result["rows"];
  const std::vector<std::string> expected = {"no_tcm", "affective_only", "joint_only", "tcm_levels_prefix(1)",
                                             "tcm_levels_prefix(2)", "tcm_levels_prefix(3)", "tcm_levels_prefix(4)"};
  o.expect(rows.size() == 7, "7 rows");
  for (std::size_t i = 0; i < std::min<std::size_t>(rows.size(), 7); ++i) {
    o.expect(rows[i]["ablation"] == expected[i], "row " + std::to_string(i + 1) + " is " + expected[i]);
    o.expect(rows[i]["report"]["per_fold_accuracy"].size() == 5, "row " + std::to_string(i + 1) + " has 5 folds");
  }
  o.expect(result.contains("split_seed"), "single split seed recorded");
  o.expect(fs::exists(out / "ablation.txt") && fs::exists(out / "manifest.json"), "table and manifest written");
  if (rows.size() == 7)
    o.info("baseline " + rows[0]["report"]["summary"].get<std::string>() + " vs full TCM " +
           rows[6]["report"]["summary"].get<std::string>() + " (trend reported, not asserted), split seed " +
           result["split_seed"].dump() + ", " + fmt("%.0f", seconds_since(t0)) + " s");
  return o;
}

// ------------------------------------------------------------------ 10

// Minimal reader for the 8-bit RGB, filter-0 PNGs the library writes.
struct Png {
  int width = 0, height = 0;
  std::vector<unsigned char> rgb;
};

bool read_png(const fs::path& path, Png& png) {
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || bytes[1] != 'P' || bytes[2] != 'N' || bytes[3] != 'G') return false;
  auto be32 = [&](std::size_t o) {
    return (std::uint32_t(bytes[o]) << 24) | (std::uint32_t(bytes[o + 1]) << 16) | (std::uint32_t(bytes[o + 2]) << 8) |
           bytes[o + 3];
  };
  std::vector<unsigned char> idat;
  for (std::size_t o = 8; o + 8 <= bytes.size();) {
    const std::uint32_t len = be32(o);
    const std::string type(bytes.begin() + static_cast<long>(o) + 4, bytes.begin() + static_cast<long>(o) + 8);
    if (type == "IHDR") {
      png.width = static_cast<int>(be32(o + 8));
      png.height = static_cast<int>(be32(o + 12));
    } else if (type == "IDAT") {
      idat.insert(idat.end(), bytes.begin() + static_cast<long>(o) + 8, bytes.begin() + static_cast<long>(o + 8 + len));
    }
    o += 12 + len;
  }
  const std::size_t stride = 1 + 3 * static_cast<std::size_t>(png.width);
  std::vector<unsigned char> raw(stride * static_cast<std::size_t>(png.height));
  uLongf raw_len = raw.size();
  if (uncompress(raw.data(), &raw_len, idat.data(), idat.size()) != Z_OK || raw_len != raw.size()) return false;
  for (int y = 0; y < png.height; ++y) {
    if (raw[static_cast<std::size_t>(y) * stride] != 0) return false;
    png.rgb.insert(png.rgb.end(), raw.begin() + static_cast<long>(y * stride + 1),
                   raw.begin() + static_cast<long>((y + 1) * stride));
  }
  return true;
}

bool is_white(const Png& p, int x, int y) {
  const std::size_t o = (static_cast<std::size_t>(y) * p.width + x) * 3;
  return p.rgb[o] == 255 && p.rgb[o + 1] == 255 && p.rgb[o + 2] == 255;
}

Outcome attention_export(const Context& ctx) {
  Outcome o;
  const auto data = synthetic_dataset(ctx);
  o.expect(!data.empty(), "synthesize command succeeds");
  if (data.empty()) return o;
  write_desk_config(ctx.work / "train.json", data.string());
  const auto train_dir = ctx.work / "train";
  int rc = run_cli(ctx, "train \"" + (ctx.work / "train.json").string() + "\" --skip-cv --out \"" + train_dir.string() + "\"");
  o.expect(rc == 0, "desk-scale train exits 0");
  if (rc != 0) return o;
  const auto vis = ctx.work / "attention";
  rc = run_cli(ctx, "visualize-attention --checkpoint \"" + (train_dir / "model.ckpt").string() + "\" --dataset \"" +
                        data.string() + "\" --sample syn-1-3 --out \"" + vis.string() + "\"");
  o.expect(rc == 0, "visualize-attention exits 0");
  if (rc != 0) return o;

  double worst_row = 0;
  int maps = 0;
  for (int level = 1; level <= 4; ++level) {
    const auto csv = vis / ("attention_level" + std::to_string(level) + ".csv");
    const auto png_path = vis / ("attention_level" + std::to_string(level) + ".png");
    if (!fs::exists(csv) || !fs::exists(png_path)) {
      o.expect(false, "level " + std::to_string(level) + " heatmap and matrix exist");
      continue;
    }
    ++maps;
    std::ifstream in(csv);
    std::vector<std::vector<double>> m;
    for (std::string line; std::getline(in, line);) {
      std::vector<double> row;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
      m.push_back(row);
    }
    const int t = static_cast<int>(m.size());
    bool square = t > 0 && t % 2 == 0;
    for (const auto& row : m) {
      square &= static_cast<int>(row.size()) == t;
      double s = 0;
      for (double v : row) {
        s += v;
        o.expect(v >= 0 && v <= 1, "entries in [0, 1]");
      }
      worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
    o.expect(square, "level " + std::to_string(level) + " matrix is square with an even token count");

    Png png;
    o.expect(read_png(png_path, png), "level " + std::to_string(level) + " PNG decodes");
    if (png.width == 0 || t == 0) continue;
    const int cell = png.width / t;
    const int boundary = (t / 2) * cell;
    bool lines = png.width == png.height && png.width == t * cell;
    for (int i = 0; i < png.width && lines; ++i) lines = is_white(png, boundary, i) && is_white(png, i, boundary);
    // Quadrant interiors carry the colormap, not the gridline colour.
    lines = lines && !is_white(png, cell / 2, cell / 2) && !is_white(png, png.width - 1, png.height - 1);
    o.expect(lines, "level " + std::to_string(level) + " heatmap has the 2x2 stream-quadrant gridlines");
  }
  o.expect(maps == 4, "4 heatmaps for the full model");
  o.expect(worst_row <= 1e-6, "rows sum to 1 within 1e-6");
  o.info(std::to_string(maps) + " heatmaps, worst row-sum deviation " + fmt("%.2e", worst_row));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) ctx.cli = argv[++i];
    else if (a == "--work" && i + 1 < argc) ctx.work = argv[++i];
    else if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: tntc_acceptance --cli PATH [--work DIR] [--only N]...\n";
      return 2;
    }
  }
  if (ctx.work.empty()) ctx.work = fs::temp_directory_path() / "tntc_acceptance";
  fs::remove_all(ctx.work);
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {"encoding oracle equivalence", encoding_oracle},
      {"projection-angle properties", projection_properties},
      {"shape contract (paper and reduced configs)", shape_contract},
      {"TCM residual identity", residual_identity},
      {"gradient checks", gradient_checks},
      {"optimizer and lr schedule", optimizer},
      {"overfit reproduction", overfit},
      {"cross-validation protocol", cv_protocol},
      {"ablation suite structure", ablation_suite},
      {"attention export", attention_export},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      out.expect(false, std::string("exception: ") + e.what());
    }
    failed += !out.pass;
    std::string detail;
    for (const auto& n : out.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("CRITERION %2d %s: %s [%s] (%.1f s)\n", id, out.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
