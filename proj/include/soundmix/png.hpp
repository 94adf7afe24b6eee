// Copyright 2026 The Soundmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "soundmix/error.hpp"

namespace soundmix {

/// 8-bit grayscale image plus tEXt metadata, row-major from the top row.
struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::pair<std::string, std::string>> texts;
};

namespace detail {

inline void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

inline std::uint32_t get_be32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) << 24 | static_cast<std::uint32_t>(p[1]) << 16 |
         static_cast<std::uint32_t>(p[2]) << 8 | static_cast<std::uint32_t>(p[3]);
}

inline void put_chunk(std::vector<unsigned char>& out, const char type[4],
                      const unsigned char* data, std::size_t len) {
  put_be32(out, static_cast<std::uint32_t>(len));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + len));
  put_be32(out, crc);
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

/// Encode an 8-bit grayscale PNG (color type 0, no interlace, filter 0 rows).
inline std::vector<unsigned char> encode_png_gray8(const GrayImage& img) {
  using detail::put_be32;
  using detail::put_chunk;

  if (img.width == 0 || img.height == 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw Error(ErrorCode::InvalidArgument, "png: bad image dimensions");

  std::vector<unsigned char> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

  unsigned char ihdr[13];
  ihdr[0] = static_cast<unsigned char>(img.width >> 24);
  ihdr[1] = static_cast<unsigned char>(img.width >> 16);
  ihdr[2] = static_cast<unsigned char>(img.width >> 8);
  ihdr[3] = static_cast<unsigned char>(img.width);
  ihdr[4] = static_cast<unsigned char>(img.height >> 24);
  ihdr[5] = static_cast<unsigned char>(img.height >> 16);
  ihdr[6] = static_cast<unsigned char>(img.height >> 8);
  ihdr[7] = static_cast<unsigned char>(img.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter method
  ihdr[12] = 0;  // no interlace
  put_chunk(out, "IHDR", ihdr, sizeof(ihdr));

  for (const auto& [key, text] : img.texts) {
    if (key.empty() || key.size() > 79)
      throw Error(ErrorCode::InvalidArgument, "png: tEXt keyword must be 1-79 chars");
    std::vector<unsigned char> payload(key.begin(), key.end());
    payload.push_back(0);
    payload.insert(payload.end(), text.begin(), text.end());
    put_chunk(out, "tEXt", payload.data(), payload.size());
  }

  // scanlines, each prefixed with filter type 0
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (img.width + 1));
  for (std::uint32_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * img.width;
    raw.insert(raw.end(), row, row + img.width);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error(ErrorCode::IoFailure, "png: zlib compression failed");
  put_chunk(out, "IDAT", comp.data(), comp_len);
  put_chunk(out, "IEND", nullptr, 0);
  return out;
}

/// Decode an 8-bit grayscale PNG produced by encode_png_gray8 (any of the
/// five standard scanline filters is accepted on read).
inline GrayImage decode_png_gray8(const std::vector<unsigned char>& bytes,
                                  const std::string& origin = "<memory>") {
  using detail::get_be32;

  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw Error(ErrorCode::MalformedContainer, origin + ": not a PNG");

  GrayImage img;
  std::vector<unsigned char> idat;
  bool have_ihdr = false;

  std::size_t pos = 8;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = get_be32(bytes.data() + pos);
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const unsigned char* data = bytes.data() + pos + 8;
    if (pos + 12 + len > bytes.size())
      throw Error(ErrorCode::MalformedContainer, origin + ": truncated chunk");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw Error(ErrorCode::MalformedContainer, origin + ": bad IHDR");
      img.width = get_be32(data);
      img.height = get_be32(data + 4);
      if (data[8] != 8 || data[9] != 0)
        throw Error(ErrorCode::UnsupportedEncoding,
                    origin + ": only 8-bit grayscale PNG supported");
      if (data[12] != 0)
        throw Error(ErrorCode::UnsupportedEncoding, origin + ": interlaced PNG unsupported");
      have_ihdr = true;
    } else if (std::memcmp(type, "tEXt", 4) == 0) {
      const unsigned char* nul =
          static_cast<const unsigned char*>(std::memchr(data, 0, len));
      if (nul != nullptr) {
        std::string key(data, nul);
        std::string text(nul + 1, data + len);
        img.texts.emplace_back(std::move(key), std::move(text));
      }
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }

  if (!have_ihdr || img.width == 0 || img.height == 0)
    throw Error(ErrorCode::MalformedContainer, origin + ": missing IHDR");

  const std::size_t stride = img.width + 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.height) * stride);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw Error(ErrorCode::MalformedContainer, origin + ": bad IDAT stream");

  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::uint32_t y = 0; y < img.height; ++y) {
    const unsigned char filter = raw[y * stride];
    const unsigned char* src = raw.data() + y * stride + 1;
    std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(y) * img.width;
    const std::uint8_t* up =
        y > 0 ? img.pixels.data() + static_cast<std::size_t>(y - 1) * img.width : nullptr;
    for (std::uint32_t x = 0; x < img.width; ++x) {
      const int a = x > 0 ? dst[x - 1] : 0;
      const int b = up ? up[x] : 0;
      const int c = (x > 0 && up) ? up[x - 1] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += detail::paeth(a, b, c); break;
        default:
          throw Error(ErrorCode::MalformedContainer, origin + ": unknown scanline filter");
      }
      dst[x] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  return img;
}

inline void save_png_gray8(const GrayImage& img, const std::string& path) {
  std::vector<unsigned char> bytes = encode_png_gray8(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

inline GrayImage load_png_gray8(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed on " + path);
  return decode_png_gray8(bytes, path);
}

}  // namespace soundmix
