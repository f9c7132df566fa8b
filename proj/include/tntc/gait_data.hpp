// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tntc {

/// Emotion categories with a fixed ordinal encoding.
enum class Emotion : std::uint8_t { happy = 0, sad = 1, angry = 2, neutral = 3 };

inline constexpr int kNumEmotions = 4;
inline constexpr int kEmotionGaitJoints = 16;
inline constexpr int kPaddedFrames = 240;

std::string_view emotion_name(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view name);
Emotion emotion_from_index(int index);
inline int emotion_index(Emotion e) { return static_cast<int>(e); }

struct Joint {
  double x = 0, y = 0, z = 0;
  bool operator==(const Joint&) const = default;
};

/// A skeleton sequence: `frames()` frames of `joints()` 3D points each.
struct GaitSequence {
  std::string id;
  Emotion label = Emotion::happy;
  int num_joints = 0;
  /// Row-major [frame][joint].
  std::vector<Joint> points;

  int frames() const { return num_joints == 0 ? 0 : static_cast<int>(points.size()) / num_joints; }
  const Joint& at(int t, int joint) const { return points[static_cast<std::size_t>(t) * num_joints + joint]; }
  Joint& at(int t, int joint) { return points[static_cast<std::size_t>(t) * num_joints + joint]; }

  bool operator==(const GaitSequence&) const = default;
};

struct Dataset {
  std::vector<GaitSequence> samples;
  std::array<int, kNumEmotions> class_counts{};

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  /// Appends and keeps class_counts consistent. Throws SchemaError when the
  /// joint count differs from the samples already present.
  void add(GaitSequence seq);
  std::vector<int> labels() const;
};

enum class DataFormat { csv, binary };

/// Picks the format from the extension: `.csv` → csv, anything else → binary.
DataFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
Dataset read_csv(std::istream& in);
Dataset read_binary(std::istream& in);

void save_dataset(const Dataset& data, const std::filesystem::path& path, DataFormat format);
void write_csv(const Dataset& data, std::ostream& out);
void write_binary(const Dataset& data, std::ostream& out);

/// Extends a sequence to `target_len` frames by cyclic repetition. Longer
/// sequences are cut to the first `target_len` frames and a warning line is
/// written to `warnings` (if non-null).
GaitSequence pad_by_duplication(const GaitSequence& seq, int target_len = kPaddedFrames,
                                std::ostream* warnings = nullptr);

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Per-class seeded shuffle followed by round-robin assignment to `k` folds.
/// The round-robin cursor carries over between classes so total fold sizes
/// also stay within one of each other.
std::vector<FoldSplit> stratified_kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed);
std::vector<FoldSplit> stratified_kfold_split(const Dataset& data, int k, std::uint64_t seed);

/// Every synthesized coordinate satisfies |c| <= kSyntheticBound.
inline constexpr double kSyntheticBound = 3.0;

/// Deterministic 16-joint walking skeleton whose limb oscillation frequency,
/// amplitude and phase profile depend on the class, plus small seeded noise.
GaitSequence synthesize_gait(int class_id, int n_frames, std::uint64_t seed);

/// `per_class` sequences of each class, interleaved by class, ids "syn-<c>-<i>".
Dataset synthesize_dataset(int per_class, int n_frames, std::uint64_t seed);

}  // namespace tntc
