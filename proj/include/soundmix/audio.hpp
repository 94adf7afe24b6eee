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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "soundmix/error.hpp"

namespace soundmix {

inline constexpr int kCanonicalSampleRate = 44100;
inline constexpr double kCanonicalDurationS = 4.0;

/// Fixed-rate mono waveform with class label and provenance. Raw decoder
/// output uses the same type with the label fields left unset.
struct AudioSegment {
  std::vector<float> samples;
  int sample_rate = 0;
  double duration_s = 0.0;
  int class_id = -1;
  std::string class_name;
  std::string source_file;
  double slice_start_s = 0.0;
  double slice_end_s = 0.0;

  std::size_t length() const { return samples.size(); }
};

struct SliceResult {
  std::vector<AudioSegment> segments;
  bool too_short = false;  // input shorter than one window; not fatal
};

/// Cut non-overlapping consecutive windows of duration_s out of raw audio.
/// The trailing remainder shorter than one window is discarded so every
/// segment has identical length. Slice times are recorded on each segment.
inline SliceResult slice_segments(const AudioSegment& raw, double duration_s) {
  if (!(duration_s > 0.0))
    throw Error(ErrorCode::InvalidArgument, "slice duration must be positive");
  if (raw.sample_rate <= 0)
    throw Error(ErrorCode::InvalidRate, "segment has no sample rate");

  const std::size_t window =
      static_cast<std::size_t>(std::llround(duration_s * raw.sample_rate));
  SliceResult out;
  if (window == 0 || raw.samples.size() < window) {
    out.too_short = true;
    return out;
  }
  const std::size_t count = raw.samples.size() / window;
  out.segments.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AudioSegment seg;
    seg.samples.assign(raw.samples.begin() + static_cast<std::ptrdiff_t>(i * window),
                       raw.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * window));
    seg.sample_rate = raw.sample_rate;
    seg.duration_s = duration_s;
    seg.class_id = raw.class_id;
    seg.class_name = raw.class_name;
    seg.source_file = raw.source_file;
    seg.slice_start_s = static_cast<double>(i * window) / raw.sample_rate;
    seg.slice_end_s = seg.slice_start_s + duration_s;
    out.segments.push_back(std::move(seg));
  }
  return out;
}

/// Ordering key that fixes the floating-point summation order when mixing,
/// so mixes are bit-identical under component permutation.
inline bool segment_order_less(const AudioSegment& a, const AudioSegment& b) {
  if (a.class_id != b.class_id) return a.class_id < b.class_id;
  if (a.source_file != b.source_file) return a.source_file < b.source_file;
  return a.slice_start_s < b.slice_start_s;
}

}  // namespace soundmix
