// SPDX-License-Identifier: Apache-2.0
#include "tntc/gait_data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "tntc/errors.hpp"

namespace tntc {

namespace {

constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {"happy", "sad", "angry", "neutral"};
constexpr char kBinaryMagic[4] = {'T', 'N', 'T', 'C'};
constexpr std::uint16_t kBinaryVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return static_cast<std::size_t>(in.gcount()) == sizeof(T);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, const std::string& id, std::size_t line_no, const char* what) {
  field = trim(field);
  T v{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": bad " + what + " '" +
                     std::string(field) + "'");
  return v;
}

struct CsvRow {
  int t;
  int joint;
  Joint p;
};

GaitSequence assemble(const std::string& id, Emotion label, const std::vector<CsvRow>& rows) {
  int num_joints = 0;
  for (const auto& r : rows) num_joints = std::max(num_joints, r.joint + 1);
  if (rows.size() % static_cast<std::size_t>(num_joints) != 0)
    throw ParseError("record '" + id + "': row count " + std::to_string(rows.size()) +
                     " is not a whole number of frames of " + std::to_string(num_joints) + " joints");
  GaitSequence seq;
  seq.id = id;
  seq.label = label;
  seq.num_joints = num_joints;
  seq.points.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int t = static_cast<int>(i) / num_joints;
    const int j = static_cast<int>(i) % num_joints;
    if (rows[i].t != t || rows[i].joint != j)
      throw ParseError("record '" + id + "': rows must be sorted by (t, joint) without gaps; expected (" +
                       std::to_string(t) + "," + std::to_string(j) + "), got (" + std::to_string(rows[i].t) +
                       "," + std::to_string(rows[i].joint) + ")");
    seq.points.push_back(rows[i].p);
  }
  return seq;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view emotion_name(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }

std::optional<Emotion> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  return std::nullopt;
}

Emotion emotion_from_index(int index) {
  if (index < 0 || index >= kNumEmotions)
    throw ContractError("emotion index out of range: " + std::to_string(index));
  return static_cast<Emotion>(index);
}

void Dataset::add(GaitSequence seq) {
  if (!samples.empty() && seq.num_joints != samples.front().num_joints)
    throw SchemaError("record '" + seq.id + "' has " + std::to_string(seq.num_joints) + " joints, dataset has " +
                      std::to_string(samples.front().num_joints));
  ++class_counts[static_cast<std::size_t>(seq.label)];
  samples.push_back(std::move(seq));
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(emotion_index(s.label));
  return out;
}

DataFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? DataFormat::csv : DataFormat::binary;
}

Dataset read_csv(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::string cur_id;
  Emotion cur_label = Emotion::happy;
  std::vector<CsvRow> rows;
  std::unordered_set<std::string> finished;

  auto flush = [&] {
    if (cur_id.empty() && rows.empty()) return;
    data.add(assemble(cur_id, cur_label, rows));
    finished.insert(cur_id);
    rows.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (sv != "id,label,t,joint,x,y,z")
        throw ParseError("line 1: expected header 'id,label,t,joint,x,y,z', got '" + std::string(sv) + "'");
      continue;
    }
    auto f = split_fields(sv);
    std::string id = f.empty() ? std::string() : std::string(trim(f[0]));
    if (f.size() != 7)
      throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": expected 7 fields, got " +
                       std::to_string(f.size()));
    if (id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty id");
    auto label = parse_emotion(trim(f[1]));
    if (!label)
      throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": unknown label '" +
                       std::string(trim(f[1])) + "'");
    if (id != cur_id) {
      flush();
      if (finished.count(id))
        throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": rows for an id must be contiguous");
      cur_id = id;
      cur_label = *label;
    } else if (*label != cur_label) {
      throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": label changes within record");
    }
    CsvRow row{};
    row.t = parse_number<int>(f[2], id, line_no, "frame index");
    row.joint = parse_number<int>(f[3], id, line_no, "joint index");
    if (row.t < 0 || row.joint < 0)
      throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": negative index");
    row.p.x = parse_number<double>(f[4], id, line_no, "x");
    row.p.y = parse_number<double>(f[5], id, line_no, "y");
    row.p.z = parse_number<double>(f[6], id, line_no, "z");
    if (!std::isfinite(row.p.x) || !std::isfinite(row.p.y) || !std::isfinite(row.p.z))
      throw ParseError("record '" + id + "' line " + std::to_string(line_no) + ": non-finite coordinate");
    rows.push_back(row);
  }
  flush();
  return data;
}

Dataset read_binary(std::istream& in) {
  Dataset data;
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() == 0) return data;
  if (in.gcount() != 4 || std::memcmp(magic, kBinaryMagic, 4) != 0) throw ParseError("bad magic: not a TNTC file");
  std::uint16_t version = 0;
  if (!get(in, version)) throw ParseError("truncated header");
  if (version != kBinaryVersion) throw ParseError("unsupported binary version " + std::to_string(version));

  while (true) {
    std::uint16_t id_len = 0;
    in.read(reinterpret_cast<char*>(&id_len), sizeof id_len);
    if (in.gcount() == 0) break;
    if (in.gcount() != sizeof id_len) throw ParseError("truncated record header after " + std::to_string(data.size()) + " records");
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    std::uint8_t label = 0;
    std::uint32_t frames = 0;
    std::uint16_t joints = 0;
    if (static_cast<std::size_t>(in.gcount()) != id_len || !get(in, label) || !get(in, frames) || !get(in, joints))
      throw ParseError("record '" + id + "': truncated header");
    if (label >= kNumEmotions) throw ParseError("record '" + id + "': label " + std::to_string(label) + " out of range");
    if (joints == 0 || frames == 0) throw ParseError("record '" + id + "': empty sequence");
    GaitSequence seq;
    seq.id = id;
    seq.label = static_cast<Emotion>(label);
    seq.num_joints = joints;
    const std::size_t n = static_cast<std::size_t>(frames) * joints;
    std::vector<float> raw(n * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != raw.size() * sizeof(float))
      throw ParseError("record '" + id + "': truncated coordinates");
    seq.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      seq.points[i] = {raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]};
      if (!std::isfinite(raw[3 * i]) || !std::isfinite(raw[3 * i + 1]) || !std::isfinite(raw[3 * i + 2]))
        throw ParseError("record '" + id + "': non-finite coordinate");
    }
    data.add(std::move(seq));
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, format == DataFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  return format == DataFormat::csv ? read_csv(in) : read_binary(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "id,label,t,joint,x,y,z\n";
  char buf[64];
  auto num = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, p - buf);
  };
  for (const auto& s : data.samples) {
    for (int t = 0; t < s.frames(); ++t)
      for (int j = 0; j < s.num_joints; ++j) {
        const auto& p = s.at(t, j);
        out << s.id << ',' << emotion_name(s.label) << ',' << t << ',' << j << ',';
        num(p.x);
        out << ',';
        num(p.y);
        out << ',';
        num(p.z);
        out << '\n';
      }
  }
}

void write_binary(const Dataset& data, std::ostream& out) {
  out.write(kBinaryMagic, 4);
  put(out, kBinaryVersion);
  for (const auto& s : data.samples) {
    if (s.id.size() > 0xFFFF) throw ContractError("id too long for binary format: " + s.id.substr(0, 32));
    put(out, static_cast<std::uint16_t>(s.id.size()));
    out.write(s.id.data(), static_cast<std::streamsize>(s.id.size()));
    put(out, static_cast<std::uint8_t>(s.label));
    put(out, static_cast<std::uint32_t>(s.frames()));
    put(out, static_cast<std::uint16_t>(s.num_joints));
    for (const auto& p : s.points) {
      put(out, static_cast<float>(p.x));
      put(out, static_cast<float>(p.y));
      put(out, static_cast<float>(p.z));
    }
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path, DataFormat format) {
  std::ofstream out(path, format == DataFormat::binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  if (format == DataFormat::csv)
    write_csv(data, out);
  else
    write_binary(data, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

GaitSequence pad_by_duplication(const GaitSequence& seq, int target_len, std::ostream* warnings) {
  if (target_len <= 0) throw ContractError("pad target length must be positive");
  const int frames = seq.frames();
  if (frames == 0) throw ContractError("cannot pad empty sequence '" + seq.id + "'");
  GaitSequence out;
  out.id = seq.id;
  out.label = seq.label;
  out.num_joints = seq.num_joints;
  if (frames > target_len && warnings)
    *warnings << "warning: sequence '" << seq.id << "' has " << frames << " frames; truncating to " << target_len
              << '\n';
  out.points.resize(static_cast<std::size_t>(target_len) * seq.num_joints);
  for (int t = 0; t < target_len; ++t)
    for (int j = 0; j < seq.num_joints; ++j) out.at(t, j) = seq.at(t % frames, j);
  return out;
}

std::vector<FoldSplit> stratified_kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k <= 0) throw ContractError("fold count must be positive");
  std::array<std::vector<int>, kNumEmotions> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= kNumEmotions) throw ContractError("label out of range at index " + std::to_string(i));
    by_class[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < kNumEmotions; ++c) {
    const auto n = by_class[static_cast<std::size_t>(c)].size();
    if (n < static_cast<std::size_t>(k))
      throw StratificationError("class '" + std::string(emotion_name(static_cast<Emotion>(c))) + "' has " +
                                std::to_string(n) + " samples, need at least " + std::to_string(k));
  }

  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(labels.size(), -1);
  int cursor = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (int idx : members) {
      fold_of[static_cast<std::size_t>(idx)] = cursor;
      cursor = (cursor + 1) % k;
    }
  }

  std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int f = 0; f < k; ++f)
      (fold_of[i] == f ? folds[static_cast<std::size_t>(f)].test : folds[static_cast<std::size_t>(f)].train)
          .push_back(static_cast<int>(i));
  return folds;
}

std::vector<FoldSplit> stratified_kfold_split(const Dataset& data, int k, std::uint64_t seed) {
  return stratified_kfold_split(data.labels(), k, seed);
}

namespace {

// 16-joint layout: 0 root, 1 spine, 2 neck, 3 head, 4-6 left shoulder/elbow/
// wrist, 7-9 right shoulder/elbow/wrist, 10-12 left hip/knee/ankle, 13-15
// right hip/knee/ankle.
constexpr std::array<Joint, kEmotionGaitJoints> kRestPose = {{
    {0.0, 1.00, 0.0},   {0.0, 1.25, 0.0},  {0.0, 1.50, 0.0},  {0.0, 1.70, 0.0},
    {-0.20, 1.45, 0.0}, {-0.25, 1.20, 0.0}, {-0.27, 0.95, 0.0}, {0.20, 1.45, 0.0},
    {0.25, 1.20, 0.0},  {0.27, 0.95, 0.0},  {-0.10, 0.95, 0.0}, {-0.11, 0.50, 0.0},
    {-0.12, 0.08, 0.0}, {0.10, 0.95, 0.0},  {0.11, 0.50, 0.0},  {0.12, 0.08, 0.0},
}};

struct GaitProfile {
  double cycles;      // stride cycles per 240 frames
  double arm_swing;   // amplitude of forearm swing (z)
  double leg_swing;   // amplitude of foot swing (z)
  double lean;        // forward lean of the upper body (z offset at the head)
  double head_drop;   // vertical offset of head and neck
  double speed;       // forward travel over 240 frames
};

constexpr std::array<GaitProfile, kNumEmotions> kProfiles = {{
    {6.0, 0.45, 0.40, -0.05, 0.05, 0.9},   // happy: brisk, bouncy, upright
    {2.0, 0.10, 0.18, 0.25, -0.15, 0.3},   // sad: slow, small swing, slumped
    {9.0, 0.60, 0.30, 0.12, 0.00, 1.0},    // angry: fast, heavy arm swing
    {4.0, 0.25, 0.28, 0.00, 0.00, 0.6},    // neutral
}};

}  // namespace

GaitSequence synthesize_gait(int class_id, int n_frames, std::uint64_t seed) {
  if (class_id < 0 || class_id >= kNumEmotions) throw ContractError("class id out of range: " + std::to_string(class_id));
  if (n_frames <= 0) throw ContractError("frame count must be positive");
  const GaitProfile& prof = kProfiles[static_cast<std::size_t>(class_id)];
  std::mt19937_64 rng(splitmix(seed * kNumEmotions + static_cast<std::uint64_t>(class_id)));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::normal_distribution<double> noise(0.0, 0.01);

  const double phase = phase_dist(rng);
  const double amp_scale = 1.0 + jitter(rng);
  const double heading = jitter(rng);  // slight lateral drift
  const double omega = 2.0 * std::numbers::pi * prof.cycles / kPaddedFrames;

  GaitSequence seq;
  seq.id = "syn-" + std::to_string(class_id) + "-" + std::to_string(seed);
  seq.label = static_cast<Emotion>(class_id);
  seq.num_joints = kEmotionGaitJoints;
  seq.points.resize(static_cast<std::size_t>(n_frames) * kEmotionGaitJoints);

  for (int t = 0; t < n_frames; ++t) {
    const double s = std::sin(omega * t + phase);
    const double bounce = 0.03 * amp_scale * std::cos(2.0 * (omega * t + phase));
    const double travel = -0.5 + prof.speed * static_cast<double>(t) / kPaddedFrames;
    for (int j = 0; j < kEmotionGaitJoints; ++j) {
      Joint p = kRestPose[static_cast<std::size_t>(j)];
      // Upper body lean grows with height above the root.
      if (j >= 1 && j <= 9) p.z += prof.lean * (p.y - 1.0) / 0.7;
      if (j == 2 || j == 3) p.y += prof.head_drop;
      // Arms swing opposite to the legs on the same side.
      const double arm = (j >= 4 && j <= 6) ? -s : (j >= 7 && j <= 9) ? s : 0.0;
      const double arm_w = (j == 5 || j == 8) ? 0.5 : (j == 6 || j == 9) ? 1.0 : 0.0;
      p.z += prof.arm_swing * amp_scale * arm * arm_w;
      const double leg = (j >= 10 && j <= 12) ? s : (j >= 13 && j <= 15) ? -s : 0.0;
      const double leg_w = (j == 11 || j == 14) ? 0.5 : (j == 12 || j == 15) ? 1.0 : 0.0;
      p.z += prof.leg_swing * amp_scale * leg * leg_w;
      if (j == 12 || j == 15) p.y += 0.05 * std::max(0.0, leg);
      p.y += bounce;
      p.z += travel;
      p.x += heading * travel;
      p.x += noise(rng);
      p.y += noise(rng);
      p.z += noise(rng);
      p.x = std::clamp(p.x, -kSyntheticBound, kSyntheticBound);
      p.y = std::clamp(p.y, -kSyntheticBound, kSyntheticBound);
      p.z = std::clamp(p.z, -kSyntheticBound, kSyntheticBound);
      seq.at(t, j) = p;
    }
  }
  return seq;
}

Dataset synthesize_dataset(int per_class, int n_frames, std::uint64_t seed) {
  if (per_class < 0) throw ContractError("per-class count must be non-negative");
  Dataset data;
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < kNumEmotions; ++c) {
      auto seq = synthesize_gait(c, n_frames, splitmix(seed) + static_cast<std::uint64_t>(i));
      seq.id = "syn-" + std::to_string(c) + "-" + std::to_string(i);
      data.add(std::move(seq));
    }
  return data;
}

}  // namespace tntc
