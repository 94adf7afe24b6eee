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
// Mixed-audio corpus construction: plan sampling, waveform merging with
// peak control, and the metadata CSV formats (own mixed format plus the
// UrbanSound8K-style single-label layout).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "soundmix/audio.hpp"
#include "soundmix/csv.hpp"
#include "soundmix/error.hpp"
#include "soundmix/rng.hpp"

namespace soundmix {

/// Renormalization target: mixes whose peak exceeds this are scaled down to it.
inline constexpr double kMixPeakTarget = 0.9;

struct MixSpec {
  enum class Mode { Fixed, Variable };
  Mode mode = Mode::Fixed;
  std::size_t fixed_components = 3;
  std::size_t min_components = 1;
  std::size_t max_components = 4;
  std::size_t total_samples = 8000;
  std::size_t num_folds = 10;
  std::uint64_t rng_seed = 0;
  std::size_t class_count = 0;

  std::size_t max_needed_classes() const {
    return mode == Mode::Fixed ? fixed_components : max_components;
  }

  void validate() const {
    if (total_samples == 0)
      throw Error(ErrorCode::InvalidArgument, "mix spec: total_samples must be positive");
    if (num_folds < 1)
      throw Error(ErrorCode::InvalidArgument, "mix spec: need at least one fold");
    if (mode == Mode::Variable &&
        !(1 <= min_components && min_components <= max_components))
      throw Error(ErrorCode::InvalidArgument, "mix spec: need 1 <= min <= max");
    if (max_needed_classes() > class_count)
      throw Error(ErrorCode::InvalidArgument,
                  "mix spec: component count exceeds class count");
  }
};

struct MixPlanEntry {
  std::vector<std::size_t> component_indices;  // indices into the pool
  std::size_t fold_id = 1;                     // 1..num_folds
};

/// Merged waveform plus its multilabel ground truth.
struct MixedSample {
  std::vector<float> samples;
  std::vector<std::uint8_t> labels;       // length class_count, union of components
  std::size_t fold_id = 1;
  std::vector<std::string> component_ids;  // provenance, sorted
  std::string file_name;
};

/// Sample total_samples plan entries: n components drawn from n distinct
/// classes (n fixed, or uniform in [min,max]), one segment uniformly from
/// each chosen class, fold uniform in [1, num_folds]. Pure function of
/// (spec, pool order, seed).
inline std::vector<MixPlanEntry> build_mix_plan(const MixSpec& spec,
                                                const std::vector<AudioSegment>& pool) {
  spec.validate();
  if (pool.empty()) throw Error(ErrorCode::InsufficientPool, "empty segment pool");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].class_id < 0 ||
        static_cast<std::size_t>(pool[i].class_id) >= spec.class_count)
      throw Error(ErrorCode::InvalidArgument,
                  "pool segment has class id outside [0, class_count)");
    by_class[pool[i].class_id].push_back(i);
  }
  if (by_class.size() < spec.max_needed_classes())
    throw Error(ErrorCode::InsufficientPool,
                "pool covers " + std::to_string(by_class.size()) + " classes, need " +
                    std::to_string(spec.max_needed_classes()));

  std::vector<int> class_ids;
  class_ids.reserve(by_class.size());
  for (const auto& [cid, _] : by_class) class_ids.push_back(cid);

  std::mt19937_64 rng(spec.rng_seed);
  std::vector<MixPlanEntry> plan;
  plan.reserve(spec.total_samples);
  for (std::size_t i = 0; i < spec.total_samples; ++i) {
    const std::size_t n =
        spec.mode == MixSpec::Mode::Fixed
            ? spec.fixed_components
            : static_cast<std::size_t>(
                  uniform_int(rng, static_cast<std::int64_t>(spec.min_components),
                              static_cast<std::int64_t>(spec.max_components)));
    MixPlanEntry entry;
    for (std::size_t c : sample_distinct(rng, class_ids.size(), n)) {
      const auto& members = by_class[class_ids[c]];
      entry.component_indices.push_back(
          members[uniform_index(rng, members.size())]);
    }
    entry.fold_id = 1 + static_cast<std::size_t>(uniform_index(rng, spec.num_folds));
    plan.push_back(std::move(entry));
  }
  return plan;
}

/// Sample-wise mean of the components, peak-renormalized to 0.9 when the
/// mean exceeds it. Labels are the union of component classes. Components
/// are summed in canonical order so any permutation yields identical bits.
inline MixedSample mix_segments(std::vector<AudioSegment> components,
                                std::size_t class_count) {
  if (components.empty())
    throw Error(ErrorCode::InvalidArgument, "mix: no components");
  for (const AudioSegment& c : components) {
    if (c.samples.size() != components.front().samples.size())
      throw Error(ErrorCode::LengthMismatch, "mix: component lengths differ");
    if (c.sample_rate != components.front().sample_rate)
      throw Error(ErrorCode::RateMismatch, "mix: component sample rates differ");
  }
  std::sort(components.begin(), components.end(), segment_order_less);

  const std::size_t n = components.front().samples.size();
  std::vector<double> acc(n, 0.0);
  for (const AudioSegment& c : components)
    for (std::size_t i = 0; i < n; ++i) acc[i] += c.samples[i];

  const double inv = 1.0 / static_cast<double>(components.size());
  double peak = 0.0;
  for (double& x : acc) {
    x *= inv;
    peak = std::max(peak, std::fabs(x));
  }
  const double gain = peak > kMixPeakTarget ? kMixPeakTarget / peak : 1.0;

  MixedSample out;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<float>(acc[i] * gain);
  out.labels.assign(class_count, 0);
  for (const AudioSegment& c : components) {
    if (c.class_id >= 0 && static_cast<std::size_t>(c.class_id) < class_count)
      out.labels[static_cast<std::size_t>(c.class_id)] = 1;
    out.component_ids.push_back(c.source_file);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metadata formats.

/// Label/bookkeeping row; the waveform itself lives in a WAV next to it.
struct SampleDescriptor {
  std::string file_name;
  std::size_t fold_id = 1;
  std::vector<int> label_ids;  // sorted, distinct
  std::vector<std::string> component_files;
  std::string class_name;  // single-label schemas only
};

inline std::vector<std::uint8_t> labels_to_vector(const std::vector<int>& ids,
                                                  std::size_t class_count) {
  std::vector<std::uint8_t> v(class_count, 0);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= class_count)
      throw Error(ErrorCode::BadRow, "label id " + std::to_string(id) + " outside [0, " +
                                         std::to_string(class_count) + ")");
    v[static_cast<std::size_t>(id)] = 1;
  }
  return v;
}

inline std::vector<int> vector_to_labels(const std::vector<std::uint8_t>& v) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) ids.push_back(static_cast<int>(i));
  return ids;
}

inline constexpr const char* kMixedMetadataHeader =
    "file_name,fold_id,labels,component_files";

/// Write the mixed-corpus CSV: labels as a |-separated sorted id list,
/// component files |-separated in their canonical order.
inline void write_metadata(const std::vector<MixedSample>& samples, const std::string& path) {
  if (samples.empty())
    throw Error(ErrorCode::InvalidArgument, "metadata: refusing to write an empty file");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  out << kMixedMetadataHeader << "\n";
  for (const MixedSample& s : samples) {
    out << s.file_name << "," << s.fold_id << ",";
    const std::vector<int> ids = vector_to_labels(s.labels);
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "|" : "") << ids[i];
    out << ",";
    for (std::size_t i = 0; i < s.component_ids.size(); ++i)
      out << (i ? "|" : "") << s.component_ids[i];
    out << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

namespace detail {

inline int parse_int_field(const std::string& s, std::size_t row, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(trim(s), &used);
    if (used != trim(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadRow,
                "row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
  }
}

inline std::ptrdiff_t find_column(const std::vector<std::string>& header,
                                  std::initializer_list<const char*> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = trim(header[i]);
    for (const char* n : names)
      if (h == n) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

}  // namespace detail

/// Parse a metadata CSV. Two header variants are recognized: the mixed
/// format written by write_metadata, and single-label layouts in the
/// UrbanSound8K style (slice_file_name/classID/fold, a class-name column
/// optional). class_count bounds the label ids; rows violating it raise
/// BadRow with the 1-based data row index.
inline std::vector<SampleDescriptor> read_metadata(const std::string& path,
                                                   std::size_t class_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::UnknownSchema, path + ": empty file");
  const std::vector<std::string> header = split_csv_row(line);

  const bool own_format =
      detail::find_column(header, {"file_name"}) >= 0 &&
      detail::find_column(header, {"labels"}) >= 0;

  std::ptrdiff_t col_file, col_fold, col_labels = -1, col_components = -1;
  std::ptrdiff_t col_class = -1, col_class_name = -1;
  if (own_format) {
    col_file = detail::find_column(header, {"file_name"});
    col_fold = detail::find_column(header, {"fold_id", "fold"});
    col_labels = detail::find_column(header, {"labels"});
    col_components = detail::find_column(header, {"component_files"});
  } else {
    col_file = detail::find_column(header, {"slice_file_name", "segment_name", "file_name"});
    col_class = detail::find_column(header, {"classID", "class_id", "classid"});
    col_fold = detail::find_column(header, {"fold", "fold_id", "folder_id", "folderID"});
    col_class_name = detail::find_column(header, {"class", "class_name"});
  }
  if (col_file < 0 || col_fold < 0 || (own_format ? col_labels < 0 : col_class < 0))
    throw Error(ErrorCode::UnknownSchema, path + ": unrecognized metadata header");

  std::vector<SampleDescriptor> out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_csv_row(line);
    const std::size_t need = static_cast<std::size_t>(
        std::max({col_file, col_fold, col_labels, col_components, col_class, col_class_name}));
    if (f.size() <= need)
      throw Error(ErrorCode::BadRow, "row " + std::to_string(row) + ": too few fields");

    SampleDescriptor d;
    d.file_name = trim(f[static_cast<std::size_t>(col_file)]);
    const int fold = detail::parse_int_field(f[static_cast<std::size_t>(col_fold)], row, "fold");
    if (fold < 1)
      throw Error(ErrorCode::BadRow, "row " + std::to_string(row) + ": fold must be >= 1");
    d.fold_id = static_cast<std::size_t>(fold);

    if (own_format) {
      for (const std::string& tok : split_on(trim(f[static_cast<std::size_t>(col_labels)]), '|')) {
        if (tok.empty()) continue;
        d.label_ids.push_back(detail::parse_int_field(tok, row, "label"));
      }
      std::sort(d.label_ids.begin(), d.label_ids.end());
      d.label_ids.erase(std::unique(d.label_ids.begin(), d.label_ids.end()),
                        d.label_ids.end());
      if (col_components >= 0) {
        for (const std::string& tok :
             split_on(trim(f[static_cast<std::size_t>(col_components)]), '|'))
          if (!tok.empty()) d.component_files.push_back(tok);
      }
    } else {
      d.label_ids.push_back(
          detail::parse_int_field(f[static_cast<std::size_t>(col_class)], row, "classID"));
      if (col_class_name >= 0) d.class_name = trim(f[static_cast<std::size_t>(col_class_name)]);
    }
    for (int id : d.label_ids)
      if (id < 0 || (class_count > 0 && static_cast<std::size_t>(id) >= class_count))
        throw Error(ErrorCode::BadRow, "row " + std::to_string(row) + ": label " +
                                           std::to_string(id) + " outside [0, " +
                                           std::to_string(class_count) + ")");
    out.push_back(std::move(d));
  }
  return out;
}

/// Corpus bookkeeping over metadata rows: totals per class and fold.
struct DatasetSummary {
  std::size_t total_segments = 0;
  std::map<int, std::size_t> per_class;
  std::map<std::string, std::size_t> class_names;  // name -> count, when present
  std::set<std::size_t> folds;
};

inline DatasetSummary summarize_dataset(const std::vector<SampleDescriptor>& rows) {
  DatasetSummary s;
  s.total_segments = rows.size();
  for (const SampleDescriptor& d : rows) {
    for (int id : d.label_ids) ++s.per_class[id];
    if (!d.class_name.empty()) ++s.class_names[d.class_name];
    s.folds.insert(d.fold_id);
  }
  return s;
}

}  // namespace soundmix
