// SPDX-License-Identifier: Apache-2.0
#include "tntc/image_io.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tntc/errors.hpp"

namespace tntc {

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

template <typename T>
void put_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ParseError("truncated encoded array");
  return v;
}

}  // namespace

void RgbImage::set(int x, int y, std::array<std::uint8_t, 3> c) {
  const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[o] = c[0];
  rgb[o + 1] = c[1];
  rgb[o + 2] = c[2];
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  if (img.width <= 0 || img.height <= 0) throw ContractError("cannot encode an empty image");
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, truecolour, deflate, no filter, no interlace
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + 3 * static_cast<std::size_t>(img.width)));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const auto* row = img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(img.width) * 3);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(len);
  if (compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw IoError("zlib compression failed");
  z.resize(len);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const RgbImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RgbImage quantize_encoded(const EncodedImage& img) {
  RgbImage out{img.width, img.height, std::vector<std::uint8_t>(static_cast<std::size_t>(img.width) * img.height * 3)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.rgb[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(img.pixels[i], 0.0, 1.0)));
  return out;
}

std::array<std::uint8_t, 3> viridis(double v) {
  // Polynomial fit of matplotlib's viridis.
  static constexpr double c[7][3] = {{0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
                                     {0.1050930431085774, 1.404613529898575, 1.384590162594685},
                                     {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
                                     {-4.634230498983486, -5.799100973351585, -19.33244095627987},
                                     {6.228269936347081, 14.17993336680509, 56.69055260068105},
                                     {4.776384997670288, -13.74514537774601, -65.35303263337234},
                                     {-5.435455855934631, 4.645852612178535, 26.3124352495832}};
  const double t = std::clamp(v, 0.0, 1.0);
  std::array<std::uint8_t, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    double acc = c[6][ch];
    for (int k = 5; k >= 0; --k) acc = acc * t + c[k][ch];
    out[static_cast<std::size_t>(ch)] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(acc, 0.0, 1.0)));
  }
  return out;
}

RgbImage render_attention_heatmap(const Tensor& matrix, int cell) {
  if (matrix.rank() != 2 || matrix.dim(0) != matrix.dim(1)) throw ContractError("heatmap needs a square matrix");
  const int t = matrix.dim(0);
  if (cell <= 0) cell = std::max(4, 392 / t);
  double peak = 0.0;
  for (double v : matrix.values()) peak = std::max(peak, v);
  const int side = t * cell;
  RgbImage img{side, side, std::vector<std::uint8_t>(static_cast<std::size_t>(side) * side * 3)};
  for (int r = 0; r < t; ++r)
    for (int c = 0; c < t; ++c) {
      const auto colour = viridis(peak > 0.0 ? matrix[static_cast<std::size_t>(r) * t + c] / peak : 0.0);
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x) img.set(c * cell + x, r * cell + y, colour);
    }
  const int boundary = (t / 2) * cell;
  for (int i = 0; i < side; ++i) {
    img.set(boundary, i, {255, 255, 255});
    img.set(i, boundary, {255, 255, 255});
  }
  return img;
}

void write_encoded_array(const EncodedImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write("TNTI", 4);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint8_t>(out, img.kind == ImageKind::sji ? 0 : 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  put_le<std::uint32_t>(out, EncodedImage::channels);
  std::vector<float> buf(img.pixels.begin(), img.pixels.end());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EncodedImage read_encoded_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "TNTI", 4) != 0) throw ParseError("not an encoded array: " + path.string());
  if (get_le<std::uint16_t>(in) != 1) throw ParseError("unsupported encoded array version");
  EncodedImage img;
  img.kind = get_le<std::uint8_t>(in) == 0 ? ImageKind::sji : ImageKind::afi;
  img.height = static_cast<int>(get_le<std::uint32_t>(in));
  img.width = static_cast<int>(get_le<std::uint32_t>(in));
  if (get_le<std::uint32_t>(in) != EncodedImage::channels) throw ParseError("encoded array must have 3 channels");
  std::vector<float> buf(static_cast<std::size_t>(img.height) * img.width * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) throw ParseError("truncated encoded array");
  img.pixels.assign(buf.begin(), buf.end());
  img.source_id = path.stem().string();
  return img;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char b = digest[i];
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

std::string git_blob_hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_hash(ss.str());
}

}  // namespace tntc
