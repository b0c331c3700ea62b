#pragma once

#include <openssl/evp.h>
#include <png.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabletop/render.hpp"

namespace tabletop {

using Bytes = std::vector<std::uint8_t>;

struct ImageIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Bytes png_write(png_image& image, const void* pixels, int row_stride) {
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels, row_stride, nullptr)) {
    throw ImageIoError(std::string("png encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, row_stride, nullptr)) {
    throw ImageIoError(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace detail

/// 8-bit RGB PNG.
inline Bytes encode_color_png(const ColorImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  return detail::png_write(image, img.rgb.data(), 0);
}

/// 16-bit grayscale PNG holding round(depth * 1000), i.e. integer millimeters.
inline Bytes encode_depth_png(const DepthImage& img) {
  std::vector<std::uint16_t> mm(img.meters.size());
  for (std::size_t i = 0; i < mm.size(); ++i) {
    const double v = std::round(static_cast<double>(img.meters[i]) * 1000.0);
    mm[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_LINEAR_Y;
  return detail::png_write(image, mm.data(), 0);
}

inline ColorImage decode_color_png(const Bytes& data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw ImageIoError(std::string("png decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  ColorImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png decode failed: ") + image.message);
  }
  return out;
}

/// Decodes a millimeter depth PNG back to meters.
inline DepthImage decode_depth_png(const Bytes& data) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw ImageIoError(std::string("png decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_LINEAR_Y;
  std::vector<std::uint16_t> mm(PNG_IMAGE_SIZE(image) / 2);
  if (!png_image_finish_read(&image, nullptr, mm.data(), 0, nullptr)) {
    throw ImageIoError(std::string("png decode failed: ") + image.message);
  }
  DepthImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.meters.resize(mm.size());
  for (std::size_t i = 0; i < mm.size(); ++i) out.meters[i] = static_cast<float>(mm[i] / 1000.0);
  return out;
}

inline std::string base64_encode(const Bytes& data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ImageIoError("base64 input length is not a multiple of 4");
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ImageIoError("invalid base64 input");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

inline std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr)) throw ImageIoError("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::string sha256_hex(const Bytes& b) { return sha256_hex(b.data(), b.size()); }

inline std::string sha256_hex(std::string_view s) { return sha256_hex(s.data(), s.size()); }

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageIoError("cannot write " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw ImageIoError("write failed: " + path);
}

inline void write_file(const std::string& path, const Bytes& b) { write_file(path, b.data(), b.size()); }

inline void write_file(const std::string& path, std::string_view s) { write_file(path, s.data(), s.size()); }

}  // namespace tabletop
