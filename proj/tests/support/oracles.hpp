// SPDX-License-Identifier: Apache-2.0
// Naive scalar reference encoders used to cross-check the vectorised ones.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tntc/gait_data.hpp"

namespace tntc::testing {

/// [T][N][3] min-max normalised coordinates.
inline std::vector<double> naive_sji(const GaitSequence& s) {
  const int T = s.frames(), N = s.num_joints;
  std::vector<double> out(static_cast<std::size_t>(T) * N * 3);
  for (int d = 0; d < 3; ++d) {
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n) {
        const Joint& p = s.at(t, n);
        const double v = d == 0 ? p.x : d == 1 ? p.y : p.z;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    for (int t = 0; t < T; ++t)
      for (int n = 0; n < N; ++n) {
        const Joint& p = s.at(t, n);
        const double v = d == 0 ? p.x : d == 1 ? p.y : p.z;
        out[(static_cast<std::size_t>(t) * N + n) * 3 + d] = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      }
  }
  return out;
}

/// Plane 1 = (x, y), plane 2 = (x, z), plane 3 = (y, z) on the standard basis.
inline double naive_angle(const Joint& p, int plane, double eps) {
  double a = 0, b = 0;
  if (plane == 1) a = p.x, b = p.y;
  if (plane == 2) a = p.x, b = p.z;
  if (plane == 3) a = p.y, b = p.z;
  return std::atan(b / (a + eps));
}

inline std::vector<double> naive_afi(const GaitSequence& s, double eps = 1e-6) {
  const int T = s.frames(), N = s.num_joints;
  const double pi = std::acos(-1.0);
  std::vector<double> out(static_cast<std::size_t>(T) * N * 3);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n)
      for (int i = 0; i < 3; ++i)
        out[(static_cast<std::size_t>(t) * N + n) * 3 + i] = (naive_angle(s.at(t, n), i + 1, eps) + pi / 2) / pi;
  return out;
}

inline GaitSequence random_sequence(std::uint64_t seed, int frames = kPaddedFrames, int joints = kEmotionGaitJoints) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  GaitSequence s;
  s.id = "r" + std::to_string(seed);
  s.num_joints = joints;
  s.points.resize(static_cast<std::size_t>(frames) * joints);
  for (auto& p : s.points) p = {d(rng), d(rng), d(rng)};
  return s;
}

}  // namespace tntc::testing
