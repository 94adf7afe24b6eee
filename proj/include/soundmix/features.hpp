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
//
// Time-frequency features: STFT, power spectrogram, Mel filter bank,
// log-Mel spectrogram and MFCC, plus the input-preparation steps
// (frame fitting, standardization, bilinear resize) and PNG/binary export.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "soundmix/audio.hpp"
#include "soundmix/error.hpp"
#include "soundmix/fft.hpp"
#include "soundmix/mat.hpp"
#include "soundmix/png.hpp"

namespace soundmix {

/// Floor added under the log so silent frames stay finite.
inline constexpr double kLogFloor = 1e-10;

/// Symmetric Hann window, values in [0, 1], w[i] == w[n-1-i].
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n - 1)));
  return w;
}

struct StftConfig {
  std::size_t n_fft = 2048;
  std::size_t hop = 512;
  std::vector<double> window;  // filled with Hann of length n_fft if empty

  static StftConfig make(std::size_t n_fft = 2048, std::size_t hop = 512) {
    StftConfig c;
    c.n_fft = n_fft;
    c.hop = hop;
    c.window = hann_window(n_fft);
    return c;
  }

  void validate() const {
    if (hop == 0 || hop > n_fft)
      throw Error(ErrorCode::InvalidArgument, "stft: need 0 < hop <= n_fft");
    if (!window.empty() && window.size() != n_fft)
      throw Error(ErrorCode::InvalidArgument, "stft: window length != n_fft");
  }

  std::size_t num_frames(std::size_t num_samples) const {
    return num_samples < n_fft ? 0 : (num_samples - n_fft) / hop + 1;
  }
};

/// Windowed DFT per frame; frame p covers samples [p*hop, p*hop + n_fft).
/// Returns the non-negative-frequency bins as an [n_fft/2+1 x n_frames]
/// complex matrix.
inline CMat stft(const AudioSegment& seg, const StftConfig& cfg) {
  cfg.validate();
  if (seg.samples.size() < cfg.n_fft)
    throw Error(ErrorCode::TooShort, "stft: signal shorter than one frame (" +
                                         std::to_string(seg.samples.size()) + " < " +
                                         std::to_string(cfg.n_fft) + ")");

  const std::vector<double> window = cfg.window.empty() ? hann_window(cfg.n_fft) : cfg.window;
  const std::size_t n_frames = cfg.num_frames(seg.samples.size());
  const std::size_t n_bins = cfg.n_fft / 2 + 1;

  FftPlan plan(cfg.n_fft);
  CMat out(n_bins, n_frames);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  for (std::size_t p = 0; p < n_frames; ++p) {
    const std::size_t start = p * cfg.hop;
    for (std::size_t q = 0; q < cfg.n_fft; ++q)
      buf[q] = {static_cast<double>(seg.samples[start + q]) * window[q], 0.0};
    plan.transform(buf);
    for (std::size_t k = 0; k < n_bins; ++k) out.at(k, p) = buf[k];
  }
  return out;
}

/// Squared-magnitude spectrogram with frequency/time axis annotations.
struct Spectrogram {
  Mat values;                      // [n_freq_bins x n_frames], nonnegative
  std::vector<double> bin_freqs;   // Hz per row
  std::vector<double> frame_times;  // seconds per column (frame start)
};

/// Elementwise |z|^2 of the STFT output.
inline Mat power_values(const CMat& stft_out) {
  Mat out(stft_out.rows, stft_out.cols);
  for (std::size_t i = 0; i < stft_out.v.size(); ++i) out.v[i] = std::norm(stft_out.v[i]);
  return out;
}

inline Spectrogram power_spectrogram(const CMat& stft_out, int sample_rate = 0,
                                     const StftConfig& cfg = {}) {
  Spectrogram s;
  s.values = power_values(stft_out);
  if (sample_rate > 0 && cfg.n_fft > 0) {
    s.bin_freqs.resize(stft_out.rows);
    for (std::size_t k = 0; k < stft_out.rows; ++k)
      s.bin_freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(cfg.n_fft);
    s.frame_times.resize(stft_out.cols);
    for (std::size_t p = 0; p < stft_out.cols; ++p)
      s.frame_times[p] = static_cast<double>(p * cfg.hop) / sample_rate;
  }
  return s;
}

/// HTK Mel scale.
inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

struct MelFilterBank {
  Mat weights;  // [n_mels x n_freq_bins]
  std::size_t n_mels = 0;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<double> edge_freqs;  // n_mels + 2 Hz edge points
};

/// Triangle response of filter m (apex 1 at the center edge point).
inline double mel_triangle_weight(const std::vector<double>& edges, std::size_t m, double f) {
  const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
  if (f <= lo || f >= hi) return 0.0;
  if (f <= center) return (f - lo) / (center - lo);
  return (hi - f) / (hi - center);
}

/// Peak-1 triangular filters on n_mels+2 Mel-equally-spaced edge points,
/// sampled at the FFT bin centers. No area normalization.
inline MelFilterBank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate,
                                    double f_min, double f_max) {
  if (sample_rate <= 0) throw Error(ErrorCode::InvalidRate, "filterbank: bad sample rate");
  if (!(f_min >= 0.0) || !(f_min < f_max) || f_max > sample_rate / 2.0)
    throw Error(ErrorCode::InvalidRange, "filterbank: need 0 <= f_min < f_max <= sr/2");
  if (n_mels < 2) throw Error(ErrorCode::InvalidRange, "filterbank: n_mels must be >= 2");

  MelFilterBank fb;
  fb.n_mels = n_mels;
  fb.f_min = f_min;
  fb.f_max = f_max;

  const double mel_lo = hz_to_mel(f_min), mel_hi = hz_to_mel(f_max);
  fb.edge_freqs.resize(n_mels + 2);
  for (std::size_t i = 0; i < n_mels + 2; ++i)
    fb.edge_freqs[i] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                               static_cast<double>(n_mels + 1));

  const std::size_t n_bins = n_fft / 2 + 1;
  fb.weights = Mat(n_mels, n_bins);
  for (std::size_t m = 0; m < n_mels; ++m)
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      fb.weights.at(m, k) = mel_triangle_weight(fb.edge_freqs, m, f);
    }
  return fb;
}

enum class FeatureKind : std::uint8_t { LogMel = 0, Mfcc = 1 };

struct StandardizeStats {
  double mean = 0.0;
  double stddev = 1.0;
};

/// 2-D time-frequency feature (rows x frames) with normalization state.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::LogMel;
  Mat values;
  std::optional<StandardizeStats> norm;  // set once standardized
};

/// Mel-filter energies: weights x power, an [n_mels x n_frames] matrix.
inline Mat mel_energies(const MelFilterBank& fb, const Mat& power) {
  if (fb.weights.cols != power.rows)
    throw Error(ErrorCode::ShapeMismatch, "filterbank bins != spectrogram bins");
  Mat out(fb.n_mels, power.cols);
  for (std::size_t m = 0; m < fb.n_mels; ++m) {
    // triangles are contiguous in frequency; skip the zero span
    std::size_t k_lo = 0, k_hi = fb.weights.cols;
    while (k_lo < k_hi && fb.weights.at(m, k_lo) == 0.0) ++k_lo;
    while (k_hi > k_lo && fb.weights.at(m, k_hi - 1) == 0.0) --k_hi;
    double* dst = out.row(m);
    for (std::size_t k = k_lo; k < k_hi; ++k) {
      const double w = fb.weights.at(m, k);
      if (w == 0.0) continue;
      const double* src = power.row(k);
      for (std::size_t p = 0; p < power.cols; ++p) dst[p] += w * src[p];
    }
  }
  return out;
}

/// log(weights x |STFT|^2 + eps), rows = n_mels.
inline FeatureMatrix log_mel_spectrogram(const AudioSegment& seg, const StftConfig& cfg,
                                         const MelFilterBank& fb) {
  const Mat power = power_values(stft(seg, cfg));
  Mat energies = mel_energies(fb, power);
  for (double& x : energies.v) x = std::log(x + kLogFloor);
  return {FeatureKind::LogMel, std::move(energies), std::nullopt};
}

/// Unnormalized type-II DCT table: row k holds cos(pi*k*(u-0.5)/U), u=1..U.
inline Mat dct_matrix(std::size_t n_coeffs, std::size_t n_mels) {
  Mat d(n_coeffs, n_mels);
  for (std::size_t k = 0; k < n_coeffs; ++k)
    for (std::size_t u = 1; u <= n_mels; ++u)
      d.at(k, u - 1) = std::cos(std::numbers::pi * static_cast<double>(k) *
                                (static_cast<double>(u) - 0.5) / static_cast<double>(n_mels));
  return d;
}

/// One MFCC frame from Mel-filter energies (floored at eps before the log).
inline std::vector<double> mfcc_frame_from_energies(const std::vector<double>& energies,
                                                    std::size_t n_coeffs) {
  const std::size_t u_count = energies.size();
  const Mat d = dct_matrix(n_coeffs, u_count);
  std::vector<double> out(n_coeffs, 0.0);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    double acc = 0.0;
    for (std::size_t u = 0; u < u_count; ++u)
      acc += std::log(std::max(energies[u], kLogFloor)) * d.at(k, u);
    out[k] = acc;
  }
  return out;
}

/// MFCC(k) = sum_u log(R(u)) * cos(pi*k*(u-0.5)/U) per frame, k < n_coeffs.
inline FeatureMatrix mfcc(const AudioSegment& seg, const StftConfig& cfg,
                          const MelFilterBank& fb, std::size_t n_coeffs) {
  if (n_coeffs > fb.n_mels)
    throw Error(ErrorCode::InvalidArgument, "mfcc: n_coeffs exceeds n_mels");
  const Mat power = power_values(stft(seg, cfg));
  Mat energies = mel_energies(fb, power);
  for (double& x : energies.v) x = std::log(std::max(x, kLogFloor));

  const Mat d = dct_matrix(n_coeffs, fb.n_mels);
  Mat out(n_coeffs, energies.cols);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    double* dst = out.row(k);
    for (std::size_t u = 0; u < fb.n_mels; ++u) {
      const double c = d.at(k, u);
      const double* src = energies.row(u);
      for (std::size_t p = 0; p < energies.cols; ++p) dst[p] += c * src[p];
    }
  }
  return {FeatureKind::Mfcc, std::move(out), std::nullopt};
}

/// Right-pad with zeros or right-truncate to exactly target_frames columns.
inline FeatureMatrix fit_frames(const FeatureMatrix& m, std::size_t target_frames) {
  if (target_frames == 0)
    throw Error(ErrorCode::InvalidArgument, "fit_frames: target must be positive");
  if (m.values.cols == target_frames) return m;
  FeatureMatrix out{m.kind, Mat(m.values.rows, target_frames), m.norm};
  const std::size_t keep = std::min(m.values.cols, target_frames);
  for (std::size_t r = 0; r < m.values.rows; ++r)
    std::copy_n(m.values.row(r), keep, out.values.row(r));
  return out;
}

/// (x - mean) / std elementwise. Without supplied stats they are fit
/// globally over the matrix and recorded on the result.
inline FeatureMatrix standardize(const FeatureMatrix& m,
                                 std::optional<StandardizeStats> stats = std::nullopt) {
  if (m.values.empty()) throw Error(ErrorCode::InvalidArgument, "standardize: empty matrix");
  StandardizeStats s;
  if (stats) {
    s = *stats;
    if (!(s.stddev > 0.0))
      throw Error(ErrorCode::DegenerateStd, "standardize: supplied std must be positive");
  } else {
    double mean = 0.0;
    for (double x : m.values.v) mean += x;
    mean /= static_cast<double>(m.values.size());
    double var = 0.0;
    for (double x : m.values.v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(m.values.size());
    s.mean = mean;
    s.stddev = std::sqrt(var);
    if (!(s.stddev > 1e-12))
      throw Error(ErrorCode::DegenerateStd, "standardize: constant input");
  }
  FeatureMatrix out{m.kind, Mat(m.values.rows, m.values.cols), s};
  for (std::size_t i = 0; i < m.values.size(); ++i)
    out.values.v[i] = (m.values.v[i] - s.mean) / s.stddev;
  return out;
}

/// Per-row variant of standardize: one (mean, std) pair per matrix row.
/// Used when features are normalized per coefficient band instead of
/// globally; stats are supplied from the training split or fit in place.
inline FeatureMatrix standardize_rows(const FeatureMatrix& m,
                                      const std::vector<StandardizeStats>* stats = nullptr) {
  if (m.values.empty()) throw Error(ErrorCode::InvalidArgument, "standardize: empty matrix");
  if (stats && stats->size() != m.values.rows)
    throw Error(ErrorCode::ShapeMismatch, "standardize: per-row stats count mismatch");
  FeatureMatrix out{m.kind, Mat(m.values.rows, m.values.cols), std::nullopt};
  for (std::size_t r = 0; r < m.values.rows; ++r) {
    StandardizeStats s;
    if (stats) {
      s = (*stats)[r];
      if (!(s.stddev > 0.0))
        throw Error(ErrorCode::DegenerateStd, "standardize: row std must be positive");
    } else {
      const double* row = m.values.row(r);
      double mean = 0.0;
      for (std::size_t c = 0; c < m.values.cols; ++c) mean += row[c];
      mean /= static_cast<double>(m.values.cols);
      double var = 0.0;
      for (std::size_t c = 0; c < m.values.cols; ++c) var += (row[c] - mean) * (row[c] - mean);
      s.mean = mean;
      s.stddev = std::sqrt(var / static_cast<double>(m.values.cols));
      if (!(s.stddev > 1e-12))
        throw Error(ErrorCode::DegenerateStd,
                    "standardize: constant row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < m.values.cols; ++c)
      out.values.at(r, c) = (m.values.at(r, c) - s.mean) / s.stddev;
  }
  return out;
}

/// Corner-aligned bilinear interpolation to [out_rows x out_cols].
inline Mat resize_bilinear(const Mat& m, std::size_t out_rows, std::size_t out_cols) {
  if (m.empty()) throw Error(ErrorCode::InvalidArgument, "resize: empty input");
  if (out_rows == 0 || out_cols == 0)
    throw Error(ErrorCode::InvalidArgument, "resize: empty output shape");
  if (m.rows == out_rows && m.cols == out_cols) return m;

  Mat out(out_rows, out_cols);
  const double rscale =
      out_rows > 1 ? static_cast<double>(m.rows - 1) / static_cast<double>(out_rows - 1) : 0.0;
  const double cscale =
      out_cols > 1 ? static_cast<double>(m.cols - 1) / static_cast<double>(out_cols - 1) : 0.0;
  for (std::size_t r = 0; r < out_rows; ++r) {
    const double fr = out_rows > 1 ? r * rscale : (m.rows - 1) * 0.5;
    const std::size_t r0 = std::min(static_cast<std::size_t>(fr), m.rows - 1);
    const std::size_t r1 = std::min(r0 + 1, m.rows - 1);
    const double wr = fr - static_cast<double>(r0);
    for (std::size_t c = 0; c < out_cols; ++c) {
      const double fc = out_cols > 1 ? c * cscale : (m.cols - 1) * 0.5;
      const std::size_t c0 = std::min(static_cast<std::size_t>(fc), m.cols - 1);
      const std::size_t c1 = std::min(c0 + 1, m.cols - 1);
      const double wc = fc - static_cast<double>(c0);
      out.at(r, c) = (1.0 - wr) * ((1.0 - wc) * m.at(r0, c0) + wc * m.at(r0, c1)) +
                     wr * ((1.0 - wc) * m.at(r1, c0) + wc * m.at(r1, c1));
    }
  }
  return out;
}

inline FeatureMatrix resize_bilinear(const FeatureMatrix& m, std::size_t out_rows,
                                     std::size_t out_cols) {
  return {m.kind, resize_bilinear(m.values, out_rows, out_cols), m.norm};
}

// ---------------------------------------------------------------------------
// Persistence: SMFX binary container and grayscale PNG.

inline constexpr char kFeatureMagic[4] = {'S', 'M', 'F', 'X'};
inline constexpr const char* kPngRangeKey = "soundmix-range";
inline constexpr const char* kPngKindKey = "soundmix-kind";

/// Serialize as magic "SMFX", u32 rows, u32 cols, kind byte, then row-major
/// 32-bit floats, all little-endian.
inline void save_feature(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  out.write(kFeatureMagic, 4);
  const std::uint32_t rows = static_cast<std::uint32_t>(m.values.rows);
  const std::uint32_t cols = static_cast<std::uint32_t>(m.values.cols);
  unsigned char hdr[9];
  std::memcpy(hdr, &rows, 4);
  std::memcpy(hdr + 4, &cols, 4);
  hdr[8] = static_cast<unsigned char>(m.kind);
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  std::vector<float> data(m.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(m.values.v[i]);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

inline FeatureMatrix load_feature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  char magic[4];
  unsigned char hdr[9];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw Error(ErrorCode::MalformedContainer, path + ": not an SMFX file");
  std::uint32_t rows, cols;
  std::memcpy(&rows, hdr, 4);
  std::memcpy(&cols, hdr + 4, 4);
  if (hdr[8] > 1)
    throw Error(ErrorCode::MalformedContainer, path + ": unknown feature kind");
  FeatureMatrix m;
  m.kind = static_cast<FeatureKind>(hdr[8]);
  m.values = Mat(rows, cols);
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::MalformedContainer, path + ": truncated SMFX payload");
  for (std::size_t i = 0; i < data.size(); ++i) m.values.v[i] = data[i];
  return m;
}

/// 8-bit grayscale PNG with [min, max] mapped linearly onto [0, 255]. The
/// value range and feature kind ride along in tEXt chunks so import can
/// invert the mapping up to 1/255 of the range.
inline void export_png(const FeatureMatrix& m, const std::string& path) {
  if (m.values.empty()) throw Error(ErrorCode::InvalidArgument, "export_png: empty matrix");
  for (double x : m.values.v)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "export_png: non-finite value");

  const auto [lo_it, hi_it] = std::minmax_element(m.values.v.begin(), m.values.v.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

  GrayImage img;
  img.width = static_cast<std::uint32_t>(m.values.cols);
  img.height = static_cast<std::uint32_t>(m.values.rows);
  img.pixels.resize(m.values.size());
  for (std::size_t i = 0; i < m.values.size(); ++i)
    img.pixels[i] = static_cast<std::uint8_t>(std::lround((m.values.v[i] - lo) * scale));

  char range[64];
  std::snprintf(range, sizeof(range), "%.17g %.17g", lo, hi);
  img.texts.emplace_back(kPngRangeKey, range);
  img.texts.emplace_back(kPngKindKey, m.kind == FeatureKind::Mfcc ? "mfcc" : "logmel");
  save_png_gray8(img, path);
}

/// Inverse of export_png. Without a range chunk the pixels map to [0, 1].
inline FeatureMatrix import_png(const std::string& path) {
  const GrayImage img = load_png_gray8(path);
  FeatureMatrix m;
  m.values = Mat(img.height, img.width);

  double lo = 0.0, hi = 255.0 * (1.0 / 255.0);
  for (const auto& [key, text] : img.texts) {
    if (key == kPngRangeKey) {
      if (std::sscanf(text.c_str(), "%lg %lg", &lo, &hi) != 2)
        throw Error(ErrorCode::MalformedContainer, path + ": bad range metadata");
    } else if (key == kPngKindKey && text == "mfcc") {
      m.kind = FeatureKind::Mfcc;
    }
  }
  const double step = (hi - lo) / 255.0;
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values.v[i] = lo + static_cast<double>(img.pixels[i]) * step;
  return m;
}

// ---------------------------------------------------------------------------
// Whole-pipeline configuration: raw segment -> model-ready matrix.

struct FeatureConfig {
  FeatureKind kind = FeatureKind::LogMel;
  std::size_t n_fft = 2048;
  std::size_t hop = 512;
  std::size_t n_mels = 128;
  double f_min = 0.0;
  double f_max = 8000.0;
  std::size_t n_coeffs = 40;       // MFCC only
  std::size_t target_frames = 400;  // pad/truncate before resize
  std::size_t image_size = 128;     // square model input

  MelFilterBank make_filterbank(int sample_rate) const {
    return mel_filterbank(n_mels, n_fft, sample_rate, f_min, f_max);
  }
};

/// Feature extraction + frame fitting + resize; standardization is applied
/// separately with statistics fit on the training split.
inline FeatureMatrix extract_feature(const AudioSegment& seg, const FeatureConfig& cfg,
                                     const MelFilterBank& fb) {
  const StftConfig stft_cfg = StftConfig::make(cfg.n_fft, cfg.hop);
  FeatureMatrix m = cfg.kind == FeatureKind::Mfcc ? mfcc(seg, stft_cfg, fb, cfg.n_coeffs)
                                                  : log_mel_spectrogram(seg, stft_cfg, fb);
  m = fit_frames(m, cfg.target_frames);
  return resize_bilinear(m, cfg.image_size, cfg.image_size);
}

}  // namespace soundmix
