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
// Independent reference implementations used only by tests. Everything
// here is written from the defining formulas, never in terms of the
// library's fast paths: naive direct DFT, literal double-loop DCT,
// brute-force confusion counts, and a central-difference gradient checker.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "soundmix/mat.hpp"
#include "soundmix/model.hpp"

namespace oracles {

/// Naive O(N^2) DFT of one frame; returns bins 0..n/2. The twiddle angle
/// is reduced mod N before the cos/sin call so large k*q products do not
/// lose precision.
inline std::vector<std::complex<double>> naive_dft_frame(std::span<const double> frame) {
  const std::size_t n = frame.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * q) % n) /
                       static_cast<double>(n);
      re += frame[q] * std::cos(a);
      im += frame[q] * std::sin(a);
    }
    out[k] = {re, im};
  }
  return out;
}

/// Literal STFT: window each frame, direct DFT sum per bin, keep the
/// nonnegative bins. The twiddle factors are tabulated once per size and
/// frames are processed in small blocks so the table streams through the
/// cache a bounded number of times; the arithmetic per (bin, frame) is
/// still the direct O(N) dot product.
class NaiveStft {
 public:
  NaiveStft(std::size_t n_fft, std::size_t hop, std::vector<double> window)
      : n_fft_(n_fft), hop_(hop), window_(std::move(window)) {
    const std::size_t n_bins = n_fft_ / 2 + 1;
    cos_.assign(n_bins * n_fft_, 0.0);
    sin_.assign(n_bins * n_fft_, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k)
      for (std::size_t q = 0; q < n_fft_; ++q) {
        const double a = -2.0 * std::numbers::pi *
                         static_cast<double>((k * q) % n_fft_) / static_cast<double>(n_fft_);
        cos_[k * n_fft_ + q] = std::cos(a);
        sin_[k * n_fft_ + q] = std::sin(a);
      }
  }

  soundmix::CMat operator()(std::span<const float> samples) const {
    const std::size_t n_frames = (samples.size() - n_fft_) / hop_ + 1;
    const std::size_t n_bins = n_fft_ / 2 + 1;

    // windowed frames, contiguous
    std::vector<double> frames(n_frames * n_fft_);
    for (std::size_t p = 0; p < n_frames; ++p)
      for (std::size_t q = 0; q < n_fft_; ++q)
        frames[p * n_fft_ + q] = static_cast<double>(samples[p * hop_ + q]) * window_[q];

    soundmix::CMat out(n_bins, n_frames);
    constexpr std::size_t kBlock = 16;
    for (std::size_t p0 = 0; p0 < n_frames; p0 += kBlock) {
      const std::size_t p1 = std::min(n_frames, p0 + kBlock);
      for (std::size_t k = 0; k < n_bins; ++k) {
        const double* cr = cos_.data() + k * n_fft_;
        const double* ci = sin_.data() + k * n_fft_;
        for (std::size_t p = p0; p < p1; ++p) {
          const double* f = frames.data() + p * n_fft_;
          // four independent partial sums per component keep the direct
          // dot product off the single add-latency chain
          double re0 = 0.0, re1 = 0.0, re2 = 0.0, re3 = 0.0;
          double im0 = 0.0, im1 = 0.0, im2 = 0.0, im3 = 0.0;
          std::size_t q = 0;
          for (; q + 4 <= n_fft_; q += 4) {
            re0 += f[q] * cr[q];
            im0 += f[q] * ci[q];
            re1 += f[q + 1] * cr[q + 1];
            im1 += f[q + 1] * ci[q + 1];
            re2 += f[q + 2] * cr[q + 2];
            im2 += f[q + 2] * ci[q + 2];
            re3 += f[q + 3] * cr[q + 3];
            im3 += f[q + 3] * ci[q + 3];
          }
          for (; q < n_fft_; ++q) {
            re0 += f[q] * cr[q];
            im0 += f[q] * ci[q];
          }
          out.at(k, p) = {(re0 + re1) + (re2 + re3), (im0 + im1) + (im2 + im3)};
        }
      }
    }
    return out;
  }

 private:
  std::size_t n_fft_, hop_;
  std::vector<double> window_;
  std::vector<double> cos_, sin_;
};

/// Composed log-Mel oracle over a naive spectrum:
/// |.|^2 -> filter-bank matmul -> log(. + eps).
inline soundmix::Mat naive_log_mel(const soundmix::CMat& spec,
                                   const soundmix::Mat& fb_weights, double eps) {
  soundmix::Mat out(fb_weights.rows, spec.cols);
  for (std::size_t m = 0; m < fb_weights.rows; ++m)
    for (std::size_t p = 0; p < spec.cols; ++p) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec.rows; ++k)
        acc += fb_weights.at(m, k) * std::norm(spec.at(k, p));
      out.at(m, p) = std::log(acc + eps);
    }
  return out;
}

/// Literal double-loop DCT evaluation of the MFCC definition:
/// MFCC(k) = sum_{u=1..U} log(R(u)) * cos(pi*k*(u-0.5)/U), energies floored.
inline soundmix::Mat naive_mfcc(const soundmix::CMat& spec, const soundmix::Mat& fb_weights,
                                std::size_t n_coeffs, double eps) {
  const std::size_t u_count = fb_weights.rows;
  soundmix::Mat out(n_coeffs, spec.cols);
  for (std::size_t p = 0; p < spec.cols; ++p) {
    std::vector<double> log_r(u_count);
    for (std::size_t u = 0; u < u_count; ++u) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec.rows; ++k)
        acc += fb_weights.at(u, k) * std::norm(spec.at(k, p));
      log_r[u] = std::log(std::max(acc, eps));
    }
    for (std::size_t k = 0; k < n_coeffs; ++k) {
      double acc = 0.0;
      for (std::size_t u = 1; u <= u_count; ++u)
        acc += log_r[u - 1] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                       (static_cast<double>(u) - 0.5) /
                                       static_cast<double>(u_count));
      out.at(k, p) = acc;
    }
  }
  return out;
}

/// Max |a-b| scaled by the oracle's max magnitude.
inline double rel_error(const soundmix::Mat& got, const soundmix::Mat& want) {
  double max_diff = 0.0, max_mag = 0.0;
  for (std::size_t i = 0; i < want.v.size(); ++i) {
    max_diff = std::max(max_diff, std::fabs(got.v[i] - want.v[i]));
    max_mag = std::max(max_mag, std::fabs(want.v[i]));
  }
  return max_diff / std::max(max_mag, 1e-300);
}

inline double rel_error(const soundmix::CMat& got, const soundmix::CMat& want) {
  double max_diff = 0.0, max_mag = 0.0;
  for (std::size_t i = 0; i < want.v.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(got.v[i] - want.v[i]));
    max_mag = std::max(max_mag, std::abs(want.v[i]));
  }
  return max_diff / std::max(max_mag, 1e-300);
}

/// Brute-force multilabel recount straight from the definitions; kept
/// independent of soundmix::macro_prf on purpose.
struct BruteMetrics {
  std::vector<long> tp, fp, fn, tn;
  std::vector<double> precision, recall, f1;
  double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
  double accuracy_percent = 0.0;
};

inline BruteMetrics brute_force_metrics(std::span<const std::uint8_t> pred,
                                        std::span<const std::uint8_t> truth,
                                        std::size_t batch, std::size_t classes) {
  BruteMetrics m;
  m.tp.assign(classes, 0);
  m.fp.assign(classes, 0);
  m.fn.assign(classes, 0);
  m.tn.assign(classes, 0);
  long match = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < classes; ++c) {
      const bool p = pred[b * classes + c] != 0;
      const bool t = truth[b * classes + c] != 0;
      if (p == t) ++match;
      if (p && t) ++m.tp[c];
      if (p && !t) ++m.fp[c];
      if (!p && t) ++m.fn[c];
      if (!p && !t) ++m.tn[c];
    }
  m.precision.assign(classes, 0.0);
  m.recall.assign(classes, 0.0);
  m.f1.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (m.tp[c] + m.fp[c] > 0)
      m.precision[c] = static_cast<double>(m.tp[c]) / static_cast<double>(m.tp[c] + m.fp[c]);
    if (m.tp[c] + m.fn[c] > 0)
      m.recall[c] = static_cast<double>(m.tp[c]) / static_cast<double>(m.tp[c] + m.fn[c]);
    if (m.precision[c] + m.recall[c] > 0.0)
      m.f1[c] = 2.0 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c]);
    m.macro_p += m.precision[c];
    m.macro_r += m.recall[c];
    m.macro_f1 += m.f1[c];
  }
  m.macro_p /= static_cast<double>(classes);
  m.macro_r /= static_cast<double>(classes);
  m.macro_f1 /= static_cast<double>(classes);
  m.accuracy_percent =
      100.0 * static_cast<double>(match) / static_cast<double>(batch * classes);
  return m;
}

/// True when two forward caches share the same piecewise-linear region:
/// identical ReLU on/off masks and identical pool argmax routes. Central
/// differences only estimate the derivative when the whole [theta-h,
/// theta+h] interval stays inside one region.
inline bool same_activation_pattern(const soundmix::ForwardCache& a,
                                    const soundmix::ForwardCache& b) {
  for (std::size_t li = 0; li < a.relu_out.size(); ++li) {
    if (a.pool_arg[li] != b.pool_arg[li]) return false;
    for (std::size_t i = 0; i < a.relu_out[li].size(); ++i)
      if ((a.relu_out[li][i] > 0.0) != (b.relu_out[li][i] > 0.0)) return false;
  }
  for (std::size_t i = 0; i < a.fc1_act.size(); ++i)
    if ((a.fc1_act[i] > 0.0) != (b.fc1_act[i] > 0.0)) return false;
  return true;
}

struct FdCheck {
  double worst_rel = 0.0;    // max per-tensor relative error
  std::size_t checked = 0;   // parameters compared
  std::size_t excluded = 0;  // parameters whose +-h sweep crossed a kink
};

/// Central finite differences of composed forward+loss over every
/// parameter tensor. With filter_kinks set, a parameter is excluded when
/// its two perturbed forwards land in different activation regions (the
/// decision never looks at the error value).
inline FdCheck finite_difference_check_full(soundmix::ModelParams& params,
                                            std::span<const double> batch, int batch_size,
                                            std::span<const double> targets, double h,
                                            bool filter_kinks) {
  using soundmix::bce_with_logits;
  using soundmix::forward;

  soundmix::ForwardCache cache;
  forward(params, batch, batch_size, &cache);
  const soundmix::LossResult base = bce_with_logits(cache.logits, targets);
  soundmix::ModelParams analytic = soundmix::backward(params, cache, base.dlogits);

  FdCheck result;
  soundmix::ForwardCache up_cache, down_cache;
  const std::vector<soundmix::TensorView> pv = soundmix::tensor_views(params);
  const std::vector<soundmix::TensorView> av = soundmix::tensor_views(analytic);
  for (std::size_t ti = 0; ti < pv.size(); ++ti) {
    double tensor_diff = 0.0, tensor_mag = 0.0;
    for (std::size_t i = 0; i < pv[ti].data->size(); ++i) {
      double& theta = (*pv[ti].data)[i];
      const double orig = theta;
      theta = orig + h;
      const double up = bce_with_logits(forward(params, batch, batch_size, &up_cache),
                                        targets).loss;
      theta = orig - h;
      const double down = bce_with_logits(forward(params, batch, batch_size, &down_cache),
                                          targets).loss;
      theta = orig;
      if (filter_kinks && !same_activation_pattern(up_cache, down_cache)) {
        ++result.excluded;
        continue;
      }
      ++result.checked;
      const double fd = (up - down) / (2.0 * h);
      tensor_diff = std::max(tensor_diff, std::fabs(fd - (*av[ti].data)[i]));
      tensor_mag = std::max(tensor_mag, std::fabs((*av[ti].data)[i]));
    }
    result.worst_rel = std::max(result.worst_rel, tensor_diff / std::max(tensor_mag, 1e-12));
  }
  return result;
}

/// Unfiltered variant returning just the worst per-tensor relative error.
inline double finite_difference_check(soundmix::ModelParams& params,
                                      std::span<const double> batch, int batch_size,
                                      std::span<const double> targets, double h = 1e-3) {
  return finite_difference_check_full(params, batch, batch_size, targets, h, false).worst_rel;
}

/// chi-square statistic for uniform occupancy.
inline double chi_square_uniform(const std::vector<std::size_t>& counts, double expected) {
  double chi = 0.0;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi += d * d / expected;
  }
  return chi;
}

}  // namespace oracles
