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

#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "soundmix/error.hpp"

namespace soundmix {

struct ClassStats {
  int class_id = 0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Per-class and aggregate multilabel metrics at a fixed threshold.
struct EvalReport {
  std::vector<ClassStats> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double elementwise_accuracy = 0.0;  // percent over the B x C label matrix
  double subset_accuracy = 0.0;       // percent of samples with all labels right
  double threshold = 0.5;
  std::size_t n_samples = 0;
};

/// 1 iff prob >= threshold (inclusive boundary).
inline std::vector<std::uint8_t> threshold_predictions(std::span<const double> probs,
                                                       double threshold) {
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    out[i] = probs[i] >= threshold ? 1 : 0;
  return out;
}

/// 100 * matching elements / (B*C).
inline double elementwise_accuracy(std::span<const std::uint8_t> pred,
                                   std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw Error(ErrorCode::ShapeMismatch, "accuracy: prediction/truth size mismatch");
  std::size_t match = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if ((pred[i] != 0) == (truth[i] != 0)) ++match;
  return 100.0 * static_cast<double>(match) / static_cast<double>(pred.size());
}

/// Per-class precision/recall/F1 with the zero-denominator convention
/// (undefined ratios count as 0) and unweighted macro means.
inline EvalReport macro_prf(std::span<const std::uint8_t> pred,
                            std::span<const std::uint8_t> truth, std::size_t batch,
                            std::size_t num_classes) {
  if (pred.size() != truth.size() || pred.size() != batch * num_classes || pred.empty())
    throw Error(ErrorCode::ShapeMismatch, "macro_prf: shape mismatch");

  EvalReport r;
  r.n_samples = batch;
  r.per_class.resize(num_classes);
  std::size_t exact = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    bool all = true;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const bool p = pred[b * num_classes + c] != 0;
      const bool t = truth[b * num_classes + c] != 0;
      ClassStats& s = r.per_class[c];
      if (p && t)
        ++s.tp;
      else if (p && !t)
        ++s.fp;
      else if (!p && t)
        ++s.fn;
      else
        ++s.tn;
      all = all && (p == t);
    }
    if (all) ++exact;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    ClassStats& s = r.per_class[c];
    s.class_id = static_cast<int>(c);
    s.precision = s.tp + s.fp > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
    s.recall = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
  }
  r.macro_precision /= static_cast<double>(num_classes);
  r.macro_recall /= static_cast<double>(num_classes);
  r.macro_f1 /= static_cast<double>(num_classes);
  r.elementwise_accuracy = elementwise_accuracy(pred, truth);
  r.subset_accuracy = 100.0 * static_cast<double>(exact) / static_cast<double>(batch);
  return r;
}

namespace detail {

inline std::string fixed4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

}  // namespace detail

/// CSV rendering: one row per class plus a macro summary row. The numbers
/// are rounded to 4 decimals, identically to the text rendering.
inline std::string report_to_csv(const EvalReport& r,
                                 const std::vector<std::string>& class_names) {
  if (class_names.size() != r.per_class.size())
    throw Error(ErrorCode::NameCountMismatch, "report: class name count mismatch");
  if (r.n_samples == 0) throw Error(ErrorCode::EmptySplit, "report: no samples");
  std::ostringstream out;
  out << "class_id,class_name,tp,fp,fn,tn,precision,recall,f1\n";
  for (const ClassStats& s : r.per_class)
    out << s.class_id << "," << class_names[static_cast<std::size_t>(s.class_id)] << ","
        << s.tp << "," << s.fp << "," << s.fn << "," << s.tn << ","
        << detail::fixed4(s.precision) << "," << detail::fixed4(s.recall) << ","
        << detail::fixed4(s.f1) << "\n";
  out << "macro,,,,,," << detail::fixed4(r.macro_precision) << ","
      << detail::fixed4(r.macro_recall) << "," << detail::fixed4(r.macro_f1) << "\n";
  return out.str();
}

/// Aligned text rendering carrying the same 4-decimal numbers as the CSV.
inline std::string report_to_text(const EvalReport& r,
                                  const std::vector<std::string>& class_names) {
  if (class_names.size() != r.per_class.size())
    throw Error(ErrorCode::NameCountMismatch, "report: class name count mismatch");
  if (r.n_samples == 0) throw Error(ErrorCode::EmptySplit, "report: no samples");
  std::size_t name_w = 5;
  for (const std::string& n : class_names) name_w = std::max(name_w, n.size());
  std::ostringstream out;
  out << std::left << std::setw(4) << "id" << std::setw(static_cast<int>(name_w) + 2)
      << "class" << std::right << std::setw(8) << "tp" << std::setw(8) << "fp" << std::setw(8)
      << "fn" << std::setw(8) << "tn" << std::setw(10) << "prec" << std::setw(10) << "rec"
      << std::setw(10) << "f1" << "\n";
  for (const ClassStats& s : r.per_class)
    out << std::left << std::setw(4) << s.class_id << std::setw(static_cast<int>(name_w) + 2)
        << class_names[static_cast<std::size_t>(s.class_id)] << std::right << std::setw(8)
        << s.tp << std::setw(8) << s.fp << std::setw(8) << s.fn << std::setw(8) << s.tn
        << std::setw(10) << detail::fixed4(s.precision) << std::setw(10)
        << detail::fixed4(s.recall) << std::setw(10) << detail::fixed4(s.f1) << "\n";
  out << "\nmacro precision " << detail::fixed4(r.macro_precision) << "  macro recall "
      << detail::fixed4(r.macro_recall) << "  macro f1 " << detail::fixed4(r.macro_f1)
      << "\nelement-wise accuracy " << detail::fixed4(r.elementwise_accuracy)
      << "%  exact-subset accuracy " << detail::fixed4(r.subset_accuracy) << "%  ("
      << r.n_samples << " samples, threshold " << r.threshold << ")\n";
  return out.str();
}

}  // namespace soundmix
