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

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace soundmix {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Forward DFT plan for a fixed size. Radix-2 iterative Cooley-Tukey for
/// power-of-two sizes, direct O(N^2) evaluation otherwise.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), radix2_(is_power_of_two(n)) {
    twiddles_.resize(n_ / 2);
    for (std::size_t k = 0; k < n_ / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_);
      twiddles_[k] = {std::cos(a), std::sin(a)};
    }
    if (!radix2_) {
      direct_.resize(n_);
      for (std::size_t k = 0; k < n_; ++k) {
        const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_);
        direct_[k] = {std::cos(a), std::sin(a)};
      }
    }
  }

  std::size_t size() const { return n_; }

  /// In-place forward transform; a.size() must equal size().
  void transform(std::vector<std::complex<double>>& a) const {
    if (radix2_)
      fft_radix2(a);
    else
      dft_direct(a);
  }

 private:
  void fft_radix2(std::vector<std::complex<double>>& a) const {
    const std::size_t n = n_;
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t step = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          const std::complex<double> w = twiddles_[k * step];
          const std::complex<double> u = a[i + k];
          const std::complex<double> t = w * a[i + k + len / 2];
          a[i + k] = u + t;
          a[i + k + len / 2] = u - t;
        }
      }
    }
  }

  void dft_direct(std::vector<std::complex<double>>& a) const {
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t q = 0; q < n_; ++q) acc += a[q] * direct_[(k * q) % n_];
      out[k] = acc;
    }
    a = std::move(out);
  }

  std::size_t n_;
  bool radix2_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::complex<double>> direct_;
};

}  // namespace soundmix
