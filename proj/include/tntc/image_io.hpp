// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tntc/encoders.hpp"
#include "tntc/tensor.hpp"

namespace tntc {

/// 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  void set(int x, int y, std::array<std::uint8_t, 3> c);
};

/// Writes a non-interlaced 8-bit RGB PNG. Output bytes depend only on the
/// pixels.
void write_png(const RgbImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RgbImage& img);

/// Channels 0..2 → R, G, B with v ↦ round(255·v).
RgbImage quantize_encoded(const EncodedImage& img);

/// Viridis colormap lookup for v in [0, 1] (clamped).
std::array<std::uint8_t, 3> viridis(double v);

/// Renders a square [T, T] matrix as a heatmap, `cell` pixels per entry,
/// colour scaled by the matrix maximum, with white gridlines at the stream
/// boundary (T/2) splitting it into four quadrants.
RgbImage render_attention_heatmap(const Tensor& matrix, int cell = 0);

/// Raw array export for encoded images: magic "TNTI", u16 version, u8 kind
/// (0 = SJI, 1 = AFI), u32 height, u32 width, u32 channels, then float32
/// little-endian pixels in (row, column, channel) order.
void write_encoded_array(const EncodedImage& img, const std::filesystem::path& path);
EncodedImage read_encoded_array(const std::filesystem::path& path);

/// Git blob object id (SHA-1 over "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);
std::string git_blob_hash_file(const std::filesystem::path& path);

}  // namespace tntc
