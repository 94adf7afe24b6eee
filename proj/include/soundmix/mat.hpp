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
#include <vector>

#include "soundmix/error.hpp"

namespace soundmix {

/// Dense row-major matrix of doubles. The workhorse container for
/// spectrograms, filter banks and feature matrices.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// Dense row-major complex matrix (STFT output).
struct CMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::complex<double>> v;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}

  std::complex<double>& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  const std::complex<double>& at(std::size_t r, std::size_t c) const {
    return v[r * cols + c];
  }
};

inline void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": " +
                                              std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                              " vs " + std::to_string(b.rows) + "x" +
                                              std::to_string(b.cols));
}

}  // namespace soundmix
