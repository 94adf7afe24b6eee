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
// Dataset splitting, Adam, and the epoch loop with per-epoch validation
// and best-validation-loss checkpoint selection.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "soundmix/error.hpp"
#include "soundmix/features.hpp"
#include "soundmix/mat.hpp"
#include "soundmix/metrics.hpp"
#include "soundmix/model.hpp"
#include "soundmix/rng.hpp"

namespace soundmix {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 16;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double threshold = 0.5;
  double split_train = 0.70;
  double split_val = 0.20;
  double split_test = 0.10;
  std::uint64_t seed = 0;
  bool stratified = false;
  bool standardize_per_row = false;  // per coefficient band instead of globally

  void validate() const {
    if (epochs < 1 || batch_size < 1)
      throw Error(ErrorCode::InvalidArgument, "train config: bad epochs/batch size");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw Error(ErrorCode::InvalidArgument, "train config: threshold must be in (0,1)");
    if (std::fabs(split_train + split_val + split_test - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "train config: split fractions must sum to 1");
    if (split_train <= 0.0 || split_val < 0.0 || split_test < 0.0)
      throw Error(ErrorCode::InvalidArgument, "train config: bad split fractions");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Disjoint, exhaustive 70-20-10 style split: sizes round(train*n),
/// round(val*n) and the remainder, over seed-shuffled indices.
inline SplitIndices split_dataset(std::size_t n, const TrainConfig& cfg) {
  cfg.validate();
  if (n < 10) throw Error(ErrorCode::TooFewItems, "split: need at least 10 items");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(cfg.seed);
  shuffle_indices(idx, rng);

  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(cfg.split_train * static_cast<double>(n)));
  const std::size_t n_val =
      static_cast<std::size_t>(std::llround(cfg.split_val * static_cast<double>(n)));
  if (n_train == 0 || n_train + n_val > n)
    throw Error(ErrorCode::TooFewItems, "split: fractions leave an empty subset");

  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
               idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

/// Optional stratified variant: samples are grouped by their exact label
/// combination and each group is dealt out round-robin in train/val/test
/// proportion, so rare combinations spread across the subsets.
inline SplitIndices split_dataset_stratified(
    const std::vector<std::vector<std::uint8_t>>& labels, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = labels.size();
  if (n < 10) throw Error(ErrorCode::TooFewItems, "split: need at least 10 items");

  std::map<std::vector<std::uint8_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);

  std::mt19937_64 rng(cfg.seed);
  SplitIndices s;
  // deal each group proportionally using an error-accumulator per subset
  for (auto& [_, members] : groups) {
    shuffle_indices(members, rng);
    double acc_train = 0.0, acc_val = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      acc_train += cfg.split_train;
      acc_val += cfg.split_val;
      if (acc_train >= 1.0) {
        acc_train -= 1.0;
        s.train.push_back(members[i]);
      } else if (acc_val >= 1.0) {
        acc_val -= 1.0;
        s.val.push_back(members[i]);
      } else {
        s.test.push_back(members[i]);
      }
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// First and second moment estimates per parameter tensor plus the step
/// counter, aligned with tensor_views order.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::int64_t t = 0;

  static AdamState like(ModelParams& params) {
    AdamState s;
    for (const TensorView& tv : tensor_views(params)) {
      s.m.emplace_back(tv.data->size(), 0.0);
      s.v.emplace_back(tv.data->size(), 0.0);
    }
    return s;
  }
};

/// One Adam update with bias correction:
/// m_hat = m/(1-b1^t), v_hat = v/(1-b2^t), theta -= lr * m_hat/(sqrt(v_hat)+eps).
inline void adam_step(ModelParams& params, ModelParams& grads, AdamState& state,
                      const TrainConfig& cfg) {
  const std::vector<TensorView> pv = tensor_views(params);
  const std::vector<TensorView> gv = tensor_views(grads);
  if (state.m.size() != pv.size())
    throw Error(ErrorCode::ShapeMismatch, "adam: state/parameter tensor count mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (std::size_t ti = 0; ti < pv.size(); ++ti) {
    std::vector<double>& theta = *pv[ti].data;
    const std::vector<double>& g = *gv[ti].data;
    std::vector<double>& m = state.m[ti];
    std::vector<double>& v = state.v[ti];
    if (theta.size() != g.size() || theta.size() != m.size())
      throw Error(ErrorCode::ShapeMismatch, "adam: tensor " + pv[ti].name + " shape mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;  // percent
  double val_macro_f1 = 0.0;
};

using ProgressSink = std::function<void(const EpochRecord&)>;

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  StandardizeStats stats;                // global mode, fit on the training split
  std::vector<StandardizeStats> row_stats;  // per-row mode, one entry per input row
  SplitIndices split;
  std::int64_t total_steps = 0;  // optimizer steps taken
};

/// Apply training-time standardization stats to a raw feature matrix.
inline Mat apply_standardization(const Mat& raw, const TrainResult& r) {
  Mat out = raw;
  if (!r.row_stats.empty()) {
    for (std::size_t row = 0; row < out.rows; ++row)
      for (std::size_t c = 0; c < out.cols; ++c)
        out.at(row, c) = (out.at(row, c) - r.row_stats[row].mean) / r.row_stats[row].stddev;
  } else {
    for (double& x : out.v) x = (x - r.stats.mean) / r.stats.stddev;
  }
  return out;
}

/// Thread cap for batch-internal parallelism (gradient chunks). Bit-exact
/// reproducibility holds per fixed value; the default of 1 is fully serial.
inline int soundmix_thread_cap() {
  if (const char* env = std::getenv("SOUNDMIX_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

namespace detail {

inline void fill_batch(const std::vector<Mat>& inputs,
                       const std::vector<std::vector<std::uint8_t>>& labels,
                       std::span<const std::size_t> idx, std::size_t lo, std::size_t hi,
                       std::vector<double>& batch, std::vector<double>& targets,
                       std::size_t num_classes) {
  const std::size_t plane = inputs[idx[lo]].size();
  batch.resize((hi - lo) * plane);
  targets.resize((hi - lo) * num_classes);
  for (std::size_t i = lo; i < hi; ++i) {
    const Mat& m = inputs[idx[i]];
    std::copy(m.v.begin(), m.v.end(), batch.begin() + static_cast<std::ptrdiff_t>((i - lo) * plane));
    for (std::size_t c = 0; c < num_classes; ++c)
      targets[(i - lo) * num_classes + c] = labels[idx[i]][c];
  }
}

inline void accumulate_params(ModelParams& into, ModelParams& from) {
  const std::vector<TensorView> a = tensor_views(into);
  const std::vector<TensorView> b = tensor_views(from);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].data->size(); ++j)
      (*a[i].data)[j] += (*b[i].data)[j];
}

}  // namespace detail

/// Mean-reduced loss and gradients over one mini-batch. With threads > 1
/// the batch is cut into fixed index chunks processed concurrently and
/// reduced in chunk order, so results are reproducible per thread count.
inline double batch_gradients(const ModelParams& params, std::span<const double> batch,
                              std::span<const double> targets, int batch_size,
                              ModelParams& grads_out, int threads) {
  const int chunks = std::max(1, std::min(threads, batch_size));
  if (chunks == 1) {
    ForwardCache cache;
    forward(params, batch, batch_size, &cache);
    const LossResult loss = bce_with_logits(cache.logits, targets);
    grads_out = backward(params, cache, loss.dlogits);
    return loss.loss;
  }

  const std::size_t plane = batch.size() / static_cast<std::size_t>(batch_size);
  const std::size_t cls = targets.size() / static_cast<std::size_t>(batch_size);
  std::vector<ModelParams> partial(static_cast<std::size_t>(chunks));
  std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);
  std::vector<int> sizes(static_cast<std::size_t>(chunks), 0);
  std::vector<std::thread> workers;
  for (int ci = 0; ci < chunks; ++ci) {
    const int lo = static_cast<int>(static_cast<std::int64_t>(ci) * batch_size / chunks);
    const int hi = static_cast<int>(static_cast<std::int64_t>(ci + 1) * batch_size / chunks);
    sizes[static_cast<std::size_t>(ci)] = hi - lo;
    workers.emplace_back([&, ci, lo, hi] {
      const int n = hi - lo;
      if (n <= 0) return;
      std::span<const double> sub_batch = batch.subspan(static_cast<std::size_t>(lo) * plane,
                                                        static_cast<std::size_t>(n) * plane);
      std::span<const double> sub_targets = targets.subspan(
          static_cast<std::size_t>(lo) * cls, static_cast<std::size_t>(n) * cls);
      ForwardCache cache;
      forward(params, sub_batch, n, &cache);
      const LossResult loss = bce_with_logits(cache.logits, sub_targets);
      partial[static_cast<std::size_t>(ci)] = backward(params, cache, loss.dlogits);
      losses[static_cast<std::size_t>(ci)] = loss.loss;
    });
  }
  for (std::thread& t : workers) t.join();

  // per-chunk results are per-element means; rescale to the full batch mean
  grads_out = zero_params(params.cfg);
  double total_loss = 0.0;
  for (int ci = 0; ci < chunks; ++ci) {
    const double scale = static_cast<double>(sizes[static_cast<std::size_t>(ci)]) /
                         static_cast<double>(batch_size);
    if (sizes[static_cast<std::size_t>(ci)] == 0) continue;
    for (const TensorView& tv : tensor_views(partial[static_cast<std::size_t>(ci)]))
      for (double& x : *tv.data) x *= scale;
    detail::accumulate_params(grads_out, partial[static_cast<std::size_t>(ci)]);
    total_loss += losses[static_cast<std::size_t>(ci)] * scale;
  }
  return total_loss;
}

/// Evaluate a parameter set on the given indices: predicted probabilities,
/// inclusive thresholding, then the multilabel report.
inline EvalReport evaluate(const ModelParams& params, const std::vector<Mat>& inputs,
                           const std::vector<std::vector<std::uint8_t>>& labels,
                           std::span<const std::size_t> indices, double threshold,
                           int batch_size = 16, double* mean_loss = nullptr) {
  if (indices.empty()) throw Error(ErrorCode::EmptySplit, "evaluate: empty split");
  const std::size_t num_classes = labels.front().size();
  std::vector<std::uint8_t> pred, truth;
  pred.reserve(indices.size() * num_classes);
  truth.reserve(indices.size() * num_classes);
  double loss_acc = 0.0;

  std::vector<double> batch, targets;
  for (std::size_t at = 0; at < indices.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi = std::min(indices.size(), at + static_cast<std::size_t>(batch_size));
    detail::fill_batch(inputs, labels, indices, at, hi, batch, targets, num_classes);
    const std::vector<double> logits =
        forward(params, batch, static_cast<int>(hi - at));
    if (mean_loss) {
      const LossResult l = bce_with_logits(logits, targets);
      loss_acc += l.loss * static_cast<double>(hi - at);
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
      pred.push_back(sigmoid(logits[i]) >= threshold ? 1 : 0);
      truth.push_back(targets[i] != 0.0 ? 1 : 0);
    }
  }
  if (mean_loss) *mean_loss = loss_acc / static_cast<double>(indices.size());
  EvalReport r = macro_prf(pred, truth, indices.size(), num_classes);
  r.threshold = threshold;
  return r;
}

/// The full training loop: split, fit standardization on the training
/// subset, then per epoch shuffle/optimize/validate. Returns the
/// parameters from the best validation-loss epoch (earliest on ties).
inline TrainResult train(const std::vector<Mat>& raw_inputs,
                         const std::vector<std::vector<std::uint8_t>>& labels,
                         const ModelConfig& model_cfg, const TrainConfig& cfg,
                         const ProgressSink& sink = {}) {
  cfg.validate();
  model_cfg.validate();
  if (raw_inputs.size() != labels.size() || raw_inputs.empty())
    throw Error(ErrorCode::InvalidArgument, "train: inputs/labels mismatch");
  const std::size_t num_classes = labels.front().size();
  if (num_classes != static_cast<std::size_t>(model_cfg.num_classes))
    throw Error(ErrorCode::ShapeMismatch, "train: label width != num_classes");
  for (const Mat& m : raw_inputs)
    if (m.rows != static_cast<std::size_t>(model_cfg.input_height) ||
        m.cols != static_cast<std::size_t>(model_cfg.input_width))
      throw Error(ErrorCode::ShapeMismatch,
                  "train: feature " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                      " does not match the model input " +
                      std::to_string(model_cfg.input_height) + "x" +
                      std::to_string(model_cfg.input_width));

  TrainResult result;
  result.split = cfg.stratified ? split_dataset_stratified(labels, cfg)
                                : split_dataset(raw_inputs.size(), cfg);
  if (result.split.train.empty()) throw Error(ErrorCode::EmptySplit, "train: empty train split");

  // standardization statistics from the training split only
  if (cfg.standardize_per_row) {
    const std::size_t rows = raw_inputs.front().rows;
    result.row_stats.assign(rows, {});
    for (std::size_t r = 0; r < rows; ++r) {
      double mean = 0.0;
      std::size_t count = 0;
      for (std::size_t i : result.split.train) {
        const double* row = raw_inputs[i].row(r);
        for (std::size_t c = 0; c < raw_inputs[i].cols; ++c) mean += row[c];
        count += raw_inputs[i].cols;
      }
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t i : result.split.train) {
        const double* row = raw_inputs[i].row(r);
        for (std::size_t c = 0; c < raw_inputs[i].cols; ++c)
          var += (row[c] - mean) * (row[c] - mean);
      }
      var /= static_cast<double>(count);
      if (!(var > 1e-24))
        throw Error(ErrorCode::DegenerateStd,
                    "train: training features are constant in row " + std::to_string(r));
      result.row_stats[r] = {mean, std::sqrt(var)};
    }
  } else {
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t i : result.split.train) {
      for (double x : raw_inputs[i].v) mean += x;
      count += raw_inputs[i].size();
    }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i : result.split.train)
      for (double x : raw_inputs[i].v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(count);
    if (!(var > 1e-24))
      throw Error(ErrorCode::DegenerateStd, "train: training features are constant");
    result.stats = {mean, std::sqrt(var)};
  }

  std::vector<Mat> inputs(raw_inputs.size());
  for (std::size_t i = 0; i < raw_inputs.size(); ++i)
    inputs[i] = apply_standardization(raw_inputs[i], result);

  ModelParams params = init_params(model_cfg);
  AdamState state = AdamState::like(params);
  const int threads = soundmix_thread_cap();

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order = result.split.train;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<double> batch, targets;
  ModelParams grads;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double train_loss = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      detail::fill_batch(inputs, labels, order, at, hi, batch, targets, num_classes);
      const double loss = batch_gradients(params, batch, targets,
                                          static_cast<int>(hi - at), grads, threads);
      if (!std::isfinite(loss))
        throw Error(ErrorCode::NonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(at / static_cast<std::size_t>(cfg.batch_size)) +
                        ": loss is not finite");
      adam_step(params, grads, state, cfg);
      train_loss += loss * static_cast<double>(hi - at);
    }
    train_loss /= static_cast<double>(order.size());

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    if (!result.split.val.empty()) {
      double val_loss = 0.0;
      const EvalReport vr = evaluate(params, inputs, labels, result.split.val, cfg.threshold,
                                     cfg.batch_size, &val_loss);
      rec.val_loss = val_loss;
      rec.val_accuracy = vr.elementwise_accuracy;
      rec.val_macro_f1 = vr.macro_f1;
    } else {
      rec.val_loss = train_loss;  // degenerate configs fall back to train loss
    }
    result.history.push_back(rec);
    if (sink) sink(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best_params = params;
      result.best_epoch = epoch;
    }
  }
  result.total_steps = state.t;
  return result;
}

}  // namespace soundmix
