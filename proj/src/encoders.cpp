// SPDX-License-Identifier: Apache-2.0
#include "tntc/encoders.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "tntc/errors.hpp"

namespace tntc {

namespace {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

constexpr double kHalfPi = std::numbers::pi / 2.0;
const double kMaxAngle = std::nextafter(kHalfPi, 0.0);

double clamp_open(double phi) {
  if (std::isnan(phi)) return 0.0;  // 0 / 0: point on the excluded line through the origin
  return std::clamp(phi, -kMaxAngle, kMaxAngle);
}

Eigen::Map<const PointMatrix> point_matrix(const GaitSequence& seq) {
  static_assert(sizeof(Joint) == 3 * sizeof(double));
  return {reinterpret_cast<const double*>(seq.points.data()), static_cast<Eigen::Index>(seq.points.size()), 3};
}

void check_padded(const GaitSequence& seq, int expected_frames) {
  if (seq.num_joints <= 0 || seq.points.empty())
    throw ContractError("cannot encode empty sequence '" + seq.id + "'");
  if (seq.frames() != expected_frames)
    throw ContractError("sequence '" + seq.id + "' has " + std::to_string(seq.frames()) + " frames, expected " +
                        std::to_string(expected_frames) + " (pad first)");
}

}  // namespace

ProjectionBasis ProjectionBasis::from_axes(const Vec3& e1, const Vec3& e2, const Vec3& e3, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("projection epsilon must be positive");
  ProjectionBasis b;
  b.operators = {{{e1, e2}, {e1, e3}, {e2, e3}}};
  b.epsilon = epsilon;
  return b;
}

ProjectionBasis ProjectionBasis::standard(double epsilon) {
  return from_axes({1, 0, 0}, {0, 1, 0}, {0, 0, 1}, epsilon);
}

double projection_angle(const Joint& p, const ProjectionBasis& basis, int plane_index) {
  if (plane_index < 1 || plane_index > 3) throw ContractError("plane index must be 1..3");
  const auto& op = basis.operators[static_cast<std::size_t>(plane_index - 1)];
  const double xp = p.x * op[0][0] + p.y * op[0][1] + p.z * op[0][2];
  const double yp = p.x * op[1][0] + p.y * op[1][1] + p.z * op[1][2];
  return clamp_open(std::atan(yp / (xp + basis.epsilon)));
}

EncodedImage encode_sji(const GaitSequence& seq, int expected_frames) {
  check_padded(seq, expected_frames);
  const auto pts = point_matrix(seq);
  const Eigen::RowVector3d lo = pts.colwise().minCoeff();
  const Eigen::RowVector3d range = pts.colwise().maxCoeff() - lo;

  EncodedImage img;
  img.height = seq.frames();
  img.width = seq.num_joints;
  img.kind = ImageKind::sji;
  img.source_id = seq.id;
  img.pixels.resize(seq.points.size() * 3);
  Eigen::Map<PointMatrix> out(img.pixels.data(), pts.rows(), 3);
  for (int c = 0; c < 3; ++c) {
    if (range[c] > 0.0)
      out.col(c) = (pts.col(c).array() - lo[c]) / range[c];
    else
      out.col(c).setZero();
  }
  return img;
}

EncodedImage encode_afi(const GaitSequence& seq, const ProjectionBasis& basis, int expected_frames) {
  check_padded(seq, expected_frames);
  const auto pts = point_matrix(seq);

  EncodedImage img;
  img.height = seq.frames();
  img.width = seq.num_joints;
  img.kind = ImageKind::afi;
  img.source_id = seq.id;
  img.pixels.resize(seq.points.size() * 3);
  Eigen::Map<PointMatrix> out(img.pixels.data(), pts.rows(), 3);
  for (int i = 0; i < 3; ++i) {
    Eigen::Matrix<double, 3, 2> op;
    for (int col = 0; col < 2; ++col)
      for (int r = 0; r < 3; ++r) op(r, col) = basis.operators[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)][static_cast<std::size_t>(r)];
    const Eigen::Matrix<double, Eigen::Dynamic, 2> proj = pts * op;
    const Eigen::ArrayXd phi = (proj.col(1).array() / (proj.col(0).array() + basis.epsilon)).atan();
    out.col(i) = (phi.unaryExpr(&clamp_open) + kHalfPi) / std::numbers::pi;
  }
  return img;
}

BilinearTaps BilinearTaps::make(int in_size, int out_size) {
  BilinearTaps taps;
  taps.lo.resize(static_cast<std::size_t>(out_size));
  taps.hi.resize(static_cast<std::size_t>(out_size));
  taps.frac.resize(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in_size - 1) lo = in_size - 1;
    const int hi = std::min(lo + 1, in_size - 1);
    double frac = src - lo;
    if (hi == lo) frac = 0.0;
    taps.lo[static_cast<std::size_t>(o)] = lo;
    taps.hi[static_cast<std::size_t>(o)] = hi;
    taps.frac[static_cast<std::size_t>(o)] = frac;
  }
  return taps;
}

EncodedImage resize_bilinear(const EncodedImage& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ContractError("resize target must be positive");
  if (img.height <= 0 || img.width <= 0) throw ContractError("cannot resize an empty image");
  if (out_h == img.height && out_w == img.width) return img;

  const auto rows = BilinearTaps::make(img.height, out_h);
  const auto cols = BilinearTaps::make(img.width, out_w);
  EncodedImage out;
  out.height = out_h;
  out.width = out_w;
  out.kind = img.kind;
  out.source_id = img.source_id;
  out.pixels.resize(static_cast<std::size_t>(out_h) * out_w * EncodedImage::channels);
  for (int y = 0; y < out_h; ++y) {
    const int y0 = rows.lo[static_cast<std::size_t>(y)], y1 = rows.hi[static_cast<std::size_t>(y)];
    const double fy = rows.frac[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const int x0 = cols.lo[static_cast<std::size_t>(x)], x1 = cols.hi[static_cast<std::size_t>(x)];
      const double fx = cols.frac[static_cast<std::size_t>(x)];
      for (int c = 0; c < EncodedImage::channels; ++c) {
        const double a = img.at(y0, x0, c), b = img.at(y0, x1, c);
        const double d = img.at(y1, x0, c), e = img.at(y1, x1, c);
        const double top = a + fx * (b - a);
        const double bot = d + fx * (e - d);
        // Rounding may step one ulp past the corners.
        out.at(y, x, c) = std::clamp(top + fy * (bot - top), std::min({a, b, d, e}), std::max({a, b, d, e}));
      }
    }
  }
  return out;
}

}  // namespace tntc
