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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "soundmix/audio.hpp"
#include "soundmix/error.hpp"

namespace soundmix {

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

inline constexpr std::uint16_t kWavFormatPcm = 0x0001;
inline constexpr std::uint16_t kWavFormatIeeeFloat = 0x0003;
inline constexpr std::uint16_t kWavFormatExtensible = 0xFFFE;

/// Decode a RIFF/WAVE byte buffer to mono float samples in [-1, 1].
///
/// Accepts 8/16/24/32-bit integer PCM and 32-bit float, 1 or 2 channels.
/// Stereo is downmixed by channel mean; integer PCM is scaled by the type's
/// max magnitude (2^(bits-1)); 8-bit is the usual unsigned variant.
inline AudioSegment decode_wav(const std::vector<unsigned char>& bytes,
                               const std::string& origin = "<memory>") {
  using detail::read_u16le;
  using detail::read_u32le;

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::MalformedContainer, origin + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    std::uint32_t chunk_len = read_u32le(bytes.data() + pos + 4);
    pos += 8;
    if (pos + chunk_len > bytes.size()) {
      // tolerate a short final data chunk, reject anything else
      if (std::memcmp(id, "data", 4) != 0)
        throw Error(ErrorCode::MalformedContainer, origin + ": truncated chunk");
      chunk_len = static_cast<std::uint32_t>(bytes.size() - pos);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw Error(ErrorCode::MalformedContainer, origin + ": fmt chunk too small");
      const unsigned char* f = bytes.data() + pos;
      format = read_u16le(f);
      channels = read_u16le(f + 2);
      rate = read_u32le(f + 4);
      bits = read_u16le(f + 14);
      if (format == kWavFormatExtensible) {
        // sub-format GUID starts at offset 24; first two bytes carry the tag
        if (chunk_len < 26)
          throw Error(ErrorCode::MalformedContainer, origin + ": bad extensible fmt");
        format = read_u16le(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    throw Error(ErrorCode::MalformedContainer, origin + ": missing fmt or data chunk");
  if (format != kWavFormatPcm && format != kWavFormatIeeeFloat)
    throw Error(ErrorCode::UnsupportedEncoding,
                origin + ": compressed or non-PCM format tag " + std::to_string(format));
  if (channels < 1 || channels > 2)
    throw Error(ErrorCode::UnsupportedEncoding,
                origin + ": " + std::to_string(channels) + " channels (want 1-2)");
  if (rate == 0) throw Error(ErrorCode::MalformedContainer, origin + ": zero sample rate");

  if (format == kWavFormatIeeeFloat && bits != 32)
    throw Error(ErrorCode::UnsupportedEncoding, origin + ": float WAV must be 32-bit");
  if (format == kWavFormatPcm && bits != 8 && bits != 16 && bits != 24 && bits != 32)
    throw Error(ErrorCode::UnsupportedEncoding,
                origin + ": unsupported PCM depth " + std::to_string(bits));

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t frames = frame_size ? data_len / frame_size : 0;
  if (frames == 0) throw Error(ErrorCode::EmptyAudio, origin + ": zero audio frames");

  AudioSegment seg;
  seg.sample_rate = static_cast<int>(rate);
  seg.duration_s = static_cast<double>(frames) / rate;
  seg.source_file = origin;
  seg.samples.resize(frames);

  auto sample_at = [&](std::size_t frame, std::uint16_t ch) -> double {
    const unsigned char* p = data + frame * frame_size + ch * bytes_per_sample;
    switch (bits) {
      case 8:
        return (static_cast<int>(p[0]) - 128) / 128.0;
      case 16: {
        std::int16_t v = static_cast<std::int16_t>(p[0] | p[1] << 8);
        return v / 32768.0;
      }
      case 24: {
        std::int32_t v = p[0] | p[1] << 8 | p[2] << 16;
        if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
        return v / 8388608.0;
      }
      case 32: {
        if (format == kWavFormatIeeeFloat) {
          float f;
          std::memcpy(&f, p, 4);
          return std::clamp(static_cast<double>(f), -1.0, 1.0);
        }
        std::int32_t v;
        std::memcpy(&v, p, 4);
        return v / 2147483648.0;
      }
      default:
        return 0.0;
    }
  };

  for (std::size_t i = 0; i < frames; ++i) {
    double s = sample_at(i, 0);
    if (channels == 2) s = 0.5 * (s + sample_at(i, 1));
    seg.samples[i] = static_cast<float>(s);
  }
  return seg;
}

/// Load a WAV file from disk; see decode_wav for format support.
inline AudioSegment load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed on " + path);
  return decode_wav(bytes, path);
}

/// Encode a segment as mono 16-bit PCM. Quantization divides the [-1, 1]
/// range into 2^16 steps, so decode(encode(x)) stays within 2^-15 per sample.
inline std::vector<unsigned char> encode_wav16(const AudioSegment& seg) {
  using detail::put_u16le;
  using detail::put_u32le;

  for (float s : seg.samples) {
    if (!std::isfinite(s))
      throw Error(ErrorCode::InvalidArgument, "non-finite sample");
    if (std::fabs(s) > 1.0f)
      throw Error(ErrorCode::InvalidArgument,
                  "sample exceeds [-1,1]; refusing to clip on write");
  }
  if (seg.sample_rate <= 0) throw Error(ErrorCode::InvalidRate, "non-positive sample rate");

  const std::uint32_t n = static_cast<std::uint32_t>(seg.samples.size());
  const std::uint32_t data_len = n * 2;
  std::vector<unsigned char> out;
  out.reserve(44 + data_len);

  auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  put_tag("RIFF");
  put_u32le(out, 36 + data_len);
  put_tag("WAVE");
  put_tag("fmt ");
  put_u32le(out, 16);
  put_u16le(out, kWavFormatPcm);
  put_u16le(out, 1);  // mono
  put_u32le(out, static_cast<std::uint32_t>(seg.sample_rate));
  put_u32le(out, static_cast<std::uint32_t>(seg.sample_rate) * 2);
  put_u16le(out, 2);   // block align
  put_u16le(out, 16);  // bits
  put_tag("data");
  put_u32le(out, data_len);
  for (std::uint32_t i = 0; i < n; ++i) {
    long q = std::lround(static_cast<double>(seg.samples[i]) * 32768.0);
    q = std::clamp(q, -32768l, 32767l);
    put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

inline void save_wav(const AudioSegment& seg, const std::string& path) {
  std::vector<unsigned char> bytes = encode_wav16(seg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

}  // namespace soundmix
