// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "tntc/gait_data.hpp"

namespace tntc {

enum class ImageKind { sji, afi };

/// A height × width × 3 image, row-major with interleaved channels.
/// For raw encodings rows are frames and columns are joints.
struct EncodedImage {
  int height = 0;
  int width = 0;
  ImageKind kind = ImageKind::sji;
  std::string source_id;
  std::vector<double> pixels;

  static constexpr int channels = 3;
  double& at(int h, int w, int c) { return pixels[(static_cast<std::size_t>(h) * width + w) * channels + c]; }
  double at(int h, int w, int c) const { return pixels[(static_cast<std::size_t>(h) * width + w) * channels + c]; }
};

inline constexpr double kProjectionEpsilon = 1e-6;

/// Three coordinate-plane projection operators, each a 3×2 matrix whose
/// columns are unit vectors: o1 = [e1,e2], o2 = [e1,e3], o3 = [e2,e3].
struct ProjectionBasis {
  using Vec3 = std::array<double, 3>;
  std::array<std::array<Vec3, 2>, 3> operators;
  double epsilon = kProjectionEpsilon;

  static ProjectionBasis standard(double epsilon = kProjectionEpsilon);
  /// Builds the three operators from arbitrary unit vectors.
  static ProjectionBasis from_axes(const Vec3& e1, const Vec3& e2, const Vec3& e3, double epsilon);
};

/// arctan(y' / (x' + eps)) with (x', y') the projection of `p` onto plane
/// `plane_index` (1-based). The result always lies strictly inside
/// (-pi/2, pi/2); a zero denominator or a ratio whose arctan rounds to
/// ±pi/2 is pulled back to the nearest representable interior value.
double projection_angle(const Joint& p, const ProjectionBasis& basis, int plane_index);

/// Raw [T, N, 3] joint-coordinate map, min-max normalized per channel.
/// A channel with zero range maps to 0.
EncodedImage encode_sji(const GaitSequence& seq, int expected_frames = kPaddedFrames);

/// Raw [T, N, 3] projection-angle map, mapped affinely from (-pi/2, pi/2)
/// to [0, 1].
EncodedImage encode_afi(const GaitSequence& seq, const ProjectionBasis& basis = ProjectionBasis::standard(),
                        int expected_frames = kPaddedFrames);

/// Bilinear resampling with half-pixel centers (align-corners off) and
/// edge clamping.
EncodedImage resize_bilinear(const EncodedImage& img, int out_h = 224, int out_w = 224);

/// Precomputed 1-D half-pixel bilinear taps, shared by image resizing and
/// feature-map upsampling.
struct BilinearTaps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> frac;  // weight of `hi`

  static BilinearTaps make(int in_size, int out_size);
};

}  // namespace tntc
