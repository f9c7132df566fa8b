// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tntc/errors.hpp"
#include "tntc/gait_data.hpp"

using namespace tntc;

namespace {

GaitSequence ramp_sequence(int frames, int joints, const std::string& id = "s") {
  GaitSequence s;
  s.id = id;
  s.label = Emotion::sad;
  s.num_joints = joints;
  for (int t = 0; t < frames; ++t)
    for (int j = 0; j < joints; ++j) s.points.push_back({double(t), double(j), double(t * 100 + j)});
  return s;
}

std::string csv_for(const Dataset& d) {
  std::ostringstream os;
  write_csv(d, os);
  return os.str();
}

}  // namespace

TEST_CASE("emotion labels use a fixed ordinal encoding") {
  CHECK(emotion_index(Emotion::happy) == 0);
  CHECK(emotion_index(Emotion::sad) == 1);
  CHECK(emotion_index(Emotion::angry) == 2);
  CHECK(emotion_index(Emotion::neutral) == 3);
  for (int i = 0; i < kNumEmotions; ++i) CHECK(parse_emotion(emotion_name(emotion_from_index(i))) == emotion_from_index(i));
  CHECK_FALSE(parse_emotion("Happy").has_value());
  CHECK_THROWS_AS(emotion_from_index(4), ContractError);
}

TEST_CASE("csv loader") {
  Dataset d;
  d.add(ramp_sequence(2, 3, "a"));
  d.add(ramp_sequence(4, 3, "b"));
  auto c = ramp_sequence(1, 3, "c");
  c.label = Emotion::angry;
  d.add(c);

  SUBCASE("three valid records round-trip") {
    std::istringstream in(csv_for(d));
    const Dataset back = read_csv(in);
    REQUIRE(back.size() == 3);
    CHECK(back.samples == d.samples);
    CHECK(back.class_counts == d.class_counts);
    CHECK(back.class_counts[1] == 2);
  }

  SUBCASE("NaN coordinate names the offending record") {
    std::string text = csv_for(d);
    const auto pos = text.find("b,sad,1,2,");
    REQUIRE(pos != std::string::npos);
    const auto end = text.find('\n', pos);
    text.replace(pos, end - pos, "b,sad,1,2,1,nan,3");
    std::istringstream in(text);
    try {
      read_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
  }

  SUBCASE("empty input yields an empty dataset") {
    std::istringstream empty("");
    CHECK(read_csv(empty).empty());
    std::istringstream header_only("id,label,t,joint,x,y,z\n");
    CHECK(read_csv(header_only).empty());
  }

  SUBCASE("inconsistent joint counts are a schema error") {
    Dataset bad;
    bad.add(ramp_sequence(2, 3, "a"));
    std::string text = csv_for(bad);
    Dataset other;
    other.add(ramp_sequence(2, 4, "z"));
    const std::string more = csv_for(other);
    text += more.substr(more.find('\n') + 1);
    std::istringstream in(text);
    CHECK_THROWS_AS(read_csv(in), SchemaError);
  }

  SUBCASE("unsorted rows and split records are rejected") {
    std::istringstream unsorted("id,label,t,joint,x,y,z\na,happy,0,1,0,0,0\na,happy,0,0,0,0,0\n");
    CHECK_THROWS_AS(read_csv(unsorted), ParseError);
    std::istringstream split("id,label,t,joint,x,y,z\na,happy,0,0,0,0,0\nb,sad,0,0,0,0,0\na,happy,1,0,0,0,0\n");
    CHECK_THROWS_AS(read_csv(split), ParseError);
    std::istringstream bad_label("id,label,t,joint,x,y,z\na,joyful,0,0,0,0,0\n");
    CHECK_THROWS_AS(read_csv(bad_label), ParseError);
  }
}

TEST_CASE("binary format round-trips at float precision") {
  Dataset d = synthesize_dataset(2, 17, 3);
  std::stringstream buf;
  write_binary(d, buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "TNTC");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, little-endian u16
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  buf.seekg(0);
  const Dataset back = read_binary(buf);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.samples[i].id == d.samples[i].id);
    CHECK(back.samples[i].label == d.samples[i].label);
    REQUIRE(back.samples[i].points.size() == d.samples[i].points.size());
    for (std::size_t k = 0; k < d.samples[i].points.size(); ++k)
      CHECK(back.samples[i].points[k].y == static_cast<float>(d.samples[i].points[k].y));
  }

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_binary(truncated), ParseError);
  std::stringstream wrong_magic("XXXX\x01\x00");
  CHECK_THROWS_AS(read_binary(wrong_magic), ParseError);
}

TEST_CASE("pad_by_duplication") {
  SUBCASE("cyclic order for 3 frames padded to 7") {
    const auto out = pad_by_duplication(ramp_sequence(3, 2), 7);
    REQUIRE(out.frames() == 7);
    const int expected[] = {0, 1, 2, 0, 1, 2, 0};
    for (int t = 0; t < 7; ++t) CHECK(out.at(t, 0).x == expected[t]);
    CHECK(out.id == "s");
    CHECK(out.label == Emotion::sad);
  }
  SUBCASE("full-length input is unchanged and padding is idempotent") {
    const auto seq = ramp_sequence(240, 16);
    CHECK(pad_by_duplication(seq) == seq);
    const auto once = pad_by_duplication(ramp_sequence(37, 16));
    CHECK(pad_by_duplication(once) == once);
  }
  SUBCASE("single frame extends to a constant sequence") {
    const auto out = pad_by_duplication(ramp_sequence(1, 16));
    REQUIRE(out.frames() == 240);
    for (int t = 0; t < 240; ++t) CHECK(out.at(t, 5) == out.at(0, 5));
  }
  SUBCASE("property: frame t equals input frame t mod T") {
    for (int frames = 1; frames <= 60; frames += 7) {
      const auto seq = ramp_sequence(frames, 4);
      const auto out = pad_by_duplication(seq, 101);
      for (int t = 0; t < 101; ++t)
        for (int j = 0; j < 4; ++j) CHECK(out.at(t, j) == seq.at(t % frames, j));
    }
  }
  SUBCASE("longer input is truncated with a warning") {
    std::ostringstream warn;
    const auto out = pad_by_duplication(ramp_sequence(250, 2), 240, &warn);
    CHECK(out.frames() == 240);
    CHECK(out.at(239, 0).x == 239);
    CHECK(warn.str().find("truncating") != std::string::npos);
  }
  SUBCASE("empty sequence") {
    GaitSequence empty;
    empty.num_joints = 16;
    CHECK_THROWS_AS(pad_by_duplication(empty), ContractError);
  }
}

namespace {

void check_partition(const std::vector<FoldSplit>& folds, const std::vector<int>& labels, int k) {
  REQUIRE(folds.size() == static_cast<std::size_t>(k));
  std::vector<int> seen(labels.size(), 0);
  for (const auto& f : folds) {
    std::set<int> test(f.test.begin(), f.test.end());
    for (int i : f.train) CHECK(test.count(i) == 0);
    CHECK(f.train.size() + f.test.size() == labels.size());
    for (int i : f.test) ++seen[static_cast<std::size_t>(i)];
  }
  for (int s : seen) CHECK(s == 1);
  for (int c = 0; c < kNumEmotions; ++c) {
    int lo = 1 << 30, hi = 0;
    for (const auto& f : folds) {
      int n = 0;
      for (int i : f.test) n += labels[static_cast<std::size_t>(i)] == c;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
  }
}

}  // namespace

TEST_CASE("stratified k-fold split") {
  SUBCASE("exact divisibility: one sample per class per fold") {
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 4);
    const auto folds = stratified_kfold_split(labels, 5, 11);
    check_partition(folds, labels, 5);
    for (const auto& f : folds) {
      std::array<int, 4> per{};
      for (int i : f.test) ++per[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      CHECK(per == std::array<int, 4>{1, 1, 1, 1});
    }
  }
  SUBCASE("21 samples: the 6-sample class doubles up in exactly one fold") {
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(i % 4);
    labels.push_back(2);
    const auto folds = stratified_kfold_split(labels, 5, 4);
    check_partition(folds, labels, 5);
    int doubled = 0;
    for (const auto& f : folds) {
      int n = 0;
      for (int i : f.test) n += labels[static_cast<std::size_t>(i)] == 2;
      CHECK((n == 1 || n == 2));
      doubled += n == 2;
    }
    CHECK(doubled == 1);
  }
  SUBCASE("deterministic given the seed, different across seeds") {
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) labels.push_back(i % 4);
    const auto a = stratified_kfold_split(labels, 5, 9);
    const auto b = stratified_kfold_split(labels, 5, 9);
    const auto c = stratified_kfold_split(labels, 5, 10);
    for (int f = 0; f < 5; ++f) CHECK(a[static_cast<std::size_t>(f)].test == b[static_cast<std::size_t>(f)].test);
    bool differs = false;
    for (int f = 0; f < 5; ++f) differs |= a[static_cast<std::size_t>(f)].test != c[static_cast<std::size_t>(f)].test;
    CHECK(differs);
  }
  SUBCASE("too few samples in a class") {
    std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3};
    CHECK_THROWS_AS(stratified_kfold_split(labels, 5, 0), StratificationError);
  }
}

TEST_CASE("synthesize_gait") {
  SUBCASE("deterministic per class and seed") {
    CHECK(synthesize_gait(0, 240, 7) == synthesize_gait(0, 240, 7));
    CHECK_FALSE(synthesize_gait(0, 240, 7) == synthesize_gait(0, 240, 8));
  }
  SUBCASE("classes differ under the same seed") {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) CHECK(synthesize_gait(a, 240, 7).points != synthesize_gait(b, 240, 7).points);
  }
  SUBCASE("coordinates are finite and bounded") {
    for (int c = 0; c < 4; ++c)
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = synthesize_gait(c, 240, seed);
        CHECK(s.num_joints == kEmotionGaitJoints);
        for (const auto& p : s.points) {
          CHECK(std::isfinite(p.x));
          CHECK(std::abs(p.x) <= kSyntheticBound);
          CHECK(std::abs(p.y) <= kSyntheticBound);
          CHECK(std::abs(p.z) <= kSyntheticBound);
        }
      }
  }
  SUBCASE("range checks") {
    CHECK_THROWS_AS(synthesize_gait(4, 10, 0), ContractError);
    CHECK_THROWS_AS(synthesize_gait(0, 0, 0), ContractError);
  }
  SUBCASE("dataset helper balances classes") {
    const auto d = synthesize_dataset(10, 120, 1);
    CHECK(d.size() == 40);
    CHECK(d.class_counts == std::array<int, 4>{10, 10, 10, 10});
  }
}
