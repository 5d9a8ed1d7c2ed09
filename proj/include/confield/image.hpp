// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "confield/errors.hpp"
#include "confield/geometry.hpp"

#ifdef CONFIELD_HAS_PNG
#include <png.h>
#endif

namespace confield {

/// RGB image, row-major, channels interleaved, values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;  // width*height*3

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.f) {}

  std::size_t index(int u, int v) const {
    return (static_cast<std::size_t>(v) * width + u) * 3;
  }

  void set(int u, int v, const Vec3& c) {
    const std::size_t i = index(u, v);
    rgb[i] = static_cast<float>(c.x);
    rgb[i + 1] = static_cast<float>(c.y);
    rgb[i + 2] = static_cast<float>(c.z);
  }

  Vec3 get(int u, int v) const {
    const std::size_t i = index(u, v);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }

  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

inline std::uint8_t quantize8(float v) {
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(c * 255.f));
}

/// Writes binary PPM (P6, maxval 255).
inline void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(ParseError::Code::io, "cannot open for writing: " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const std::size_t i = img.index(u, v);
      row[static_cast<std::size_t>(u) * 3] = quantize8(img.rgb[i]);
      row[static_cast<std::size_t>(u) * 3 + 1] = quantize8(img.rgb[i + 1]);
      row[static_cast<std::size_t>(u) * 3 + 2] = quantize8(img.rgb[i + 2]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw ParseError(ParseError::Code::io, "write failed: " + path.string());
}

namespace detail {

inline int ppm_token(std::istream& in) {
  // Skips whitespace and '#' comments, then reads one non-negative integer.
  int c = in.get();
  while (c != EOF && (std::isspace(c) || c == '#')) {
    if (c == '#')
      while (c != EOF && c != '\n') c = in.get();
    c = in.get();
  }
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ParseError(ParseError::Code::bad_value, "malformed PPM header");
  return value;
}

}  // namespace detail

inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Code::io, "cannot open: " + path.string());
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '6')
    throw ParseError(ParseError::Code::bad_magic, "not a P6 PPM: " + path.string());
  const int w = detail::ppm_token(in);
  const int h = detail::ppm_token(in);
  const int maxval = detail::ppm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw ParseError(ParseError::Code::bad_value, "unsupported PPM header: " + path.string());
  Image img(w, h);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw ParseError(ParseError::Code::truncated, "truncated PPM payload: " + path.string());
  for (std::size_t i = 0; i < buf.size(); ++i) img.rgb[i] = buf[i] / 255.f;
  return img;
}

#ifdef CONFIELD_HAS_PNG
inline Image read_png(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw ParseError(ParseError::Code::io, "cannot open: " + path.string());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  Image img;
  if (png_image_begin_read_from_file(&png, path.string().c_str())) {
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
    if (png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
      img = Image(static_cast<int>(png.width), static_cast<int>(png.height));
      for (std::size_t i = 0; i < buf.size(); ++i) img.rgb[i] = buf[i] / 255.f;
      std::fclose(fp);
      return img;
    }
  }
  std::fclose(fp);
  throw ParseError(ParseError::Code::bad_value, "PNG decode failed: " + path.string());
}
#endif

/// Reads an image by extension (.ppm always; .png when built with libpng).
inline Image read_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".ppm") return read_ppm(path);
#ifdef CONFIELD_HAS_PNG
  if (ext == ".png") return read_png(path);
#endif
  throw ParseError(ParseError::Code::bad_value, "unsupported image format: " + path.string());
}

}  // namespace confield
