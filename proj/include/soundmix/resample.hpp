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
#include <numbers>

#include "soundmix/audio.hpp"
#include "soundmix/error.hpp"

namespace soundmix {

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// Kaiser window on u in [-1, 1], zero outside.
inline double kaiser(double u, double beta) {
  const double t = 1.0 - u * u;
  if (t < 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(t)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace detail

inline constexpr double kResampleKaiserBeta = 8.0;
inline constexpr int kResampleZeroCrossings = 32;

/// Band-limited rate conversion by Kaiser-windowed sinc interpolation.
/// Output length is round(input_length * target/source); equal rates pass
/// the samples through untouched. When downsampling the kernel cutoff is
/// scaled to the output Nyquist to avoid aliasing.
inline AudioSegment resample(const AudioSegment& seg, int target_rate) {
  if (seg.sample_rate <= 0 || target_rate <= 0)
    throw Error(ErrorCode::InvalidRate, "sample rates must be positive");
  if (target_rate == seg.sample_rate) return seg;

  const double ratio = static_cast<double>(target_rate) / seg.sample_rate;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = kResampleZeroCrossings / cutoff;  // in input samples

  AudioSegment out;
  out.sample_rate = target_rate;
  out.class_id = seg.class_id;
  out.class_name = seg.class_name;
  out.source_file = seg.source_file;
  out.slice_start_s = seg.slice_start_s;
  out.slice_end_s = seg.slice_end_s;

  const std::size_t in_len = seg.samples.size();
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in_len) * ratio));
  out.duration_s = static_cast<double>(out_len) / target_rate;
  out.samples.resize(out_len);

  for (std::size_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const auto m0 = static_cast<std::ptrdiff_t>(std::ceil(center - half_width));
    const auto m1 = static_cast<std::ptrdiff_t>(std::floor(center + half_width));
    double acc = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(m0, 0);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(m1, static_cast<std::ptrdiff_t>(in_len) - 1);
    for (std::ptrdiff_t m = lo; m <= hi; ++m) {
      const double d = static_cast<double>(m) - center;
      acc += seg.samples[static_cast<std::size_t>(m)] * cutoff *
             detail::sinc(cutoff * d) * detail::kaiser(d / half_width, kResampleKaiserBeta);
    }
    out.samples[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace soundmix
