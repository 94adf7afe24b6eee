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
// Command-line front end: mixed-corpus generation, feature extraction,
// training, evaluation, single-file prediction with plot export, and
// metadata inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "soundmix/audio.hpp"
#include "soundmix/features.hpp"
#include "soundmix/metrics.hpp"
#include "soundmix/mixer.hpp"
#include "soundmix/model.hpp"
#include "soundmix/resample.hpp"
#include "soundmix/trainer.hpp"
#include "soundmix/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const ordered_json& details) {
  ordered_json m;
  m["command"] = command;
  for (auto& [k, v] : details.items()) m[k] = v;
  m["timestamp"] = iso_timestamp();
  std::ofstream out(out_dir / "run_manifest.json", std::ios::trunc);
  out << m.dump(2) << "\n";
}

std::string fold_dir_name(std::size_t fold) { return "fold" + std::to_string(fold); }

std::string replace_extension(const std::string& name, const std::string& ext) {
  const std::size_t dot = name.find_last_of('.');
  return (dot == std::string::npos ? name : name.substr(0, dot)) + ext;
}

// ---------------------------------------------------------------------------
// Feature config <-> JSON and CLI flags.

ordered_json feature_config_to_json(const soundmix::FeatureConfig& fc, int sample_rate,
                                    double segment_seconds) {
  return ordered_json{{"kind", fc.kind == soundmix::FeatureKind::Mfcc ? "mfcc" : "melspec"},
                      {"sample_rate", sample_rate},
                      {"segment_seconds", segment_seconds},
                      {"n_fft", fc.n_fft},
                      {"hop", fc.hop},
                      {"n_mels", fc.n_mels},
                      {"f_min", fc.f_min},
                      {"f_max", fc.f_max},
                      {"n_coeffs", fc.n_coeffs},
                      {"target_frames", fc.target_frames},
                      {"image_size", fc.image_size}};
}

soundmix::FeatureConfig feature_config_from_json(const json& j, int* sample_rate = nullptr,
                                                 double* segment_seconds = nullptr) {
  soundmix::FeatureConfig fc;
  fc.kind = j.value("kind", "melspec") == std::string("mfcc") ? soundmix::FeatureKind::Mfcc
                                                              : soundmix::FeatureKind::LogMel;
  fc.n_fft = j.value("n_fft", fc.n_fft);
  fc.hop = j.value("hop", fc.hop);
  fc.n_mels = j.value("n_mels", fc.n_mels);
  fc.f_min = j.value("f_min", fc.f_min);
  fc.f_max = j.value("f_max", fc.f_max);
  fc.n_coeffs = j.value("n_coeffs", fc.n_coeffs);
  fc.target_frames = j.value("target_frames", fc.target_frames);
  fc.image_size = j.value("image_size", fc.image_size);
  if (sample_rate) *sample_rate = j.value("sample_rate", soundmix::kCanonicalSampleRate);
  if (segment_seconds)
    *segment_seconds = j.value("segment_seconds", soundmix::kCanonicalDurationS);
  return fc;
}

// ---------------------------------------------------------------------------
// Class bookkeeping files.

void write_classes_csv(const fs::path& path, const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::trunc);
  out << "class_id,class_name\n";
  for (std::size_t i = 0; i < names.size(); ++i) out << i << "," << names[i] << "\n";
}

std::vector<std::string> read_classes_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::string line;
  std::getline(in, line);  // header
  std::map<int, std::string> by_id;
  while (std::getline(in, line)) {
    if (soundmix::trim(line).empty()) continue;
    const auto f = soundmix::split_csv_row(line);
    if (f.size() >= 2) by_id[std::stoi(f[0])] = soundmix::trim(f[1]);
  }
  std::vector<std::string> names;
  for (const auto& [id, name] : by_id) {
    while (names.size() < static_cast<std::size_t>(id)) names.push_back("");
    names.push_back(name);
  }
  return names;
}

std::vector<std::string> class_names_for(const std::vector<soundmix::SampleDescriptor>& rows,
                                         const fs::path& meta_path) {
  std::vector<std::string> names = read_classes_csv(meta_path.parent_path() / "classes.csv");
  int max_id = -1;
  for (const auto& d : rows)
    for (int id : d.label_ids) max_id = std::max(max_id, id);
  while (static_cast<int>(names.size()) <= max_id)
    names.push_back("class_" + std::to_string(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].empty()) names[i] = "class_" + std::to_string(i);
  return names;
}

// ---------------------------------------------------------------------------
// mix

struct MixArgs {
  std::string pool_dir, out_dir, mode = "fixed3";
  std::size_t count = 8000, folds = 10;
  std::size_t min_components = 1, max_components = 4;
  std::uint64_t seed = 0;
  int sample_rate = soundmix::kCanonicalSampleRate;
  double seconds = soundmix::kCanonicalDurationS;
};

int run_mix(const MixArgs& a) {
  using namespace soundmix;

  // pool layout: one subdirectory per class, WAVs inside
  std::vector<std::string> class_names;
  for (const auto& e : fs::directory_iterator(a.pool_dir))
    if (e.is_directory()) class_names.push_back(e.path().filename().string());
  std::sort(class_names.begin(), class_names.end());
  if (class_names.empty())
    throw Error(ErrorCode::InsufficientPool,
                a.pool_dir + ": no class subdirectories found");

  std::vector<AudioSegment> pool;
  for (std::size_t cid = 0; cid < class_names.size(); ++cid) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fs::path(a.pool_dir) / class_names[cid]))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      AudioSegment raw = load_wav(f.string());
      raw = resample(raw, a.sample_rate);
      raw.class_id = static_cast<int>(cid);
      raw.class_name = class_names[cid];
      raw.source_file = f.filename().string();
      SliceResult sliced = slice_segments(raw, a.seconds);
      if (sliced.too_short) {
        std::cerr << "warning: " << f << " shorter than " << a.seconds << "s, skipped\n";
        continue;
      }
      for (AudioSegment& s : sliced.segments) pool.push_back(std::move(s));
    }
  }

  MixSpec spec;
  spec.mode = a.mode == "variable" ? MixSpec::Mode::Variable : MixSpec::Mode::Fixed;
  spec.min_components = a.min_components;
  spec.max_components = a.max_components;
  spec.total_samples = a.count;
  spec.num_folds = a.folds;
  spec.rng_seed = a.seed;
  spec.class_count = class_names.size();

  const std::vector<MixPlanEntry> plan = build_mix_plan(spec, pool);

  fs::create_directories(a.out_dir);
  for (std::size_t f = 1; f <= a.folds; ++f)
    fs::create_directories(fs::path(a.out_dir) / fold_dir_name(f));

  std::vector<MixedSample> samples;
  samples.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    std::vector<AudioSegment> components;
    for (std::size_t idx : plan[i].component_indices) components.push_back(pool[idx]);
    MixedSample mixed = mix_segments(std::move(components), spec.class_count);
    mixed.fold_id = plan[i].fold_id;
    char name[32];
    std::snprintf(name, sizeof(name), "mix_%05zu.wav", i);
    mixed.file_name = name;

    AudioSegment out_seg;
    out_seg.samples = mixed.samples;
    out_seg.sample_rate = a.sample_rate;
    save_wav(out_seg, (fs::path(a.out_dir) / fold_dir_name(mixed.fold_id) / name).string());
    mixed.samples.clear();  // keep only bookkeeping for the metadata pass
    samples.push_back(std::move(mixed));
  }
  write_metadata(samples, (fs::path(a.out_dir) / "metadata.csv").string());
  write_classes_csv(fs::path(a.out_dir) / "classes.csv", class_names);
  write_manifest(a.out_dir, "mix",
                 ordered_json{{"seed", a.seed},
                              {"pool_dir", a.pool_dir},
                              {"out_dir", a.out_dir},
                              {"mode", a.mode},
                              {"count", a.count},
                              {"folds", a.folds}});
  std::cout << "mixed " << samples.size() << " samples from a pool of " << pool.size()
            << " segments across " << class_names.size() << " classes\n";
  return 0;
}

// ---------------------------------------------------------------------------
// featurize

struct FeaturizeArgs {
  std::string in_dir, meta, out_dir, feature = "melspec";
  bool png = false;
  soundmix::FeatureConfig fc;
};

int run_featurize(const FeaturizeArgs& a) {
  using namespace soundmix;
  const std::string meta = a.meta.empty() ? (fs::path(a.in_dir) / "metadata.csv").string() : a.meta;
  const std::vector<SampleDescriptor> rows = read_metadata(meta, 0);
  if (rows.empty()) throw Error(ErrorCode::EmptySplit, meta + ": no metadata rows");

  FeatureConfig fc = a.fc;
  fc.kind = a.feature == "mfcc" ? FeatureKind::Mfcc : FeatureKind::LogMel;

  fs::create_directories(a.out_dir);
  std::set<std::size_t> folds;
  for (const auto& d : rows) folds.insert(d.fold_id);
  for (std::size_t f : folds) fs::create_directories(fs::path(a.out_dir) / fold_dir_name(f));

  int sample_rate = 0;
  double seconds = 0.0;
  std::optional<MelFilterBank> fb;

  const int threads = soundmix_thread_cap();
  std::vector<std::string> failures(rows.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const SampleDescriptor& d = rows[i];
      try {
        const fs::path wav = fs::path(a.in_dir) / fold_dir_name(d.fold_id) / d.file_name;
        const AudioSegment seg = load_wav(wav.string());
        if (seg.sample_rate != sample_rate)
          throw Error(ErrorCode::RateMismatch, wav.string() + ": rate differs from corpus");
        const FeatureMatrix m = extract_feature(seg, fc, *fb);
        const fs::path base = fs::path(a.out_dir) / fold_dir_name(d.fold_id);
        save_feature(m, (base / replace_extension(d.file_name, ".smfx")).string());
        if (a.png) export_png(m, (base / replace_extension(d.file_name, ".png")).string());
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };

  if (!rows.empty()) {
    // probe the first file for the corpus rate, then build the filter bank once
    const fs::path first = fs::path(a.in_dir) / fold_dir_name(rows[0].fold_id) / rows[0].file_name;
    const AudioSegment probe = load_wav(first.string());
    sample_rate = probe.sample_rate;
    seconds = probe.duration_s;
    fb = fc.make_filterbank(sample_rate);

    if (threads <= 1 || rows.size() < 2) {
      work(0, rows.size());
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (rows.size() + threads - 1) / static_cast<std::size_t>(threads);
      for (std::size_t lo = 0; lo < rows.size(); lo += chunk)
        pool.emplace_back(work, lo, std::min(rows.size(), lo + chunk));
      for (std::thread& t : pool) t.join();
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!failures[i].empty())
      throw Error(ErrorCode::IoFailure, rows[i].file_name + ": " + failures[i]);

  {
    std::ofstream out(fs::path(a.out_dir) / "feature_config.json", std::ios::trunc);
    out << feature_config_to_json(fc, sample_rate, seconds).dump(2) << "\n";
  }
  if (fs::exists(fs::path(meta).parent_path() / "classes.csv"))
    fs::copy_file(fs::path(meta).parent_path() / "classes.csv",
                  fs::path(a.out_dir) / "classes.csv", fs::copy_options::overwrite_existing);
  write_manifest(a.out_dir, "featurize",
                 ordered_json{{"in_dir", a.in_dir},
                              {"meta", meta},
                              {"out_dir", a.out_dir},
                              {"feature", a.feature},
                              {"png", a.png}});
  std::cout << "featurized " << rows.size() << " samples (" << a.feature << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

soundmix::TrainConfig train_config_from_json(const json& j) {
  soundmix::TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.threshold = j.value("threshold", cfg.threshold);
  if (j.contains("split")) {
    const auto s = j.at("split").get<std::vector<double>>();
    if (s.size() != 3)
      throw soundmix::Error(soundmix::ErrorCode::InvalidArgument,
                            "config: split must have 3 fractions");
    cfg.split_train = s[0];
    cfg.split_val = s[1];
    cfg.split_test = s[2];
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.stratified = j.value("stratified", cfg.stratified);
  cfg.standardize_per_row = j.value("standardize_per_row", cfg.standardize_per_row);
  return cfg;
}

// standardization block of a checkpoint: global (mean/std) or per-row
struct StandardizeSpec {
  bool per_row = false;
  double mean = 0.0, stddev = 1.0;
  std::vector<double> means, stds;
};

StandardizeSpec standardize_from_json(const json& j) {
  StandardizeSpec s;
  if (j.value("mode", "global") == std::string("per_row")) {
    s.per_row = true;
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
  } else {
    s.mean = j.at("mean").get<double>();
    s.stddev = j.at("std").get<double>();
  }
  return s;
}

void apply_standardize(soundmix::Mat& m, const StandardizeSpec& s) {
  if (s.per_row) {
    if (s.means.size() != m.rows)
      throw soundmix::Error(soundmix::ErrorCode::ShapeMismatch,
                            "checkpoint per-row stats do not match the feature rows");
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < m.cols; ++c)
        m.at(r, c) = (m.at(r, c) - s.means[r]) / s.stds[r];
  } else {
    for (double& x : m.v) x = (x - s.mean) / s.stddev;
  }
}

ordered_json train_config_to_json(const soundmix::TrainConfig& cfg) {
  return ordered_json{{"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"learning_rate", cfg.learning_rate},
                      {"adam_beta1", cfg.adam_beta1},
                      {"adam_beta2", cfg.adam_beta2},
                      {"adam_eps", cfg.adam_eps},
                      {"threshold", cfg.threshold},
                      {"split", std::vector<double>{cfg.split_train, cfg.split_val, cfg.split_test}},
                      {"seed", cfg.seed},
                      {"stratified", cfg.stratified},
                      {"standardize_per_row", cfg.standardize_per_row}};
}

struct LoadedFeatures {
  std::vector<soundmix::Mat> inputs;
  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<std::string> class_names;
  json feature_config;
};

LoadedFeatures load_feature_set(const std::string& features_dir, const std::string& meta) {
  using namespace soundmix;
  LoadedFeatures out;
  const std::vector<SampleDescriptor> rows = read_metadata(meta, 0);
  out.class_names = class_names_for(rows, meta);
  const fs::path classes_here = fs::path(features_dir) / "classes.csv";
  if (out.class_names.empty() || fs::exists(classes_here)) {
    std::vector<std::string> alt = read_classes_csv(classes_here);
    if (alt.size() > out.class_names.size()) out.class_names = std::move(alt);
  }
  const std::size_t num_classes = out.class_names.size();

  const fs::path fc_path = fs::path(features_dir) / "feature_config.json";
  if (fs::exists(fc_path)) {
    std::ifstream in(fc_path);
    in >> out.feature_config;
  }

  out.inputs.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (const SampleDescriptor& d : rows) {
    const fs::path p = fs::path(features_dir) / fold_dir_name(d.fold_id) /
                       replace_extension(d.file_name, ".smfx");
    out.inputs.push_back(load_feature(p.string()).values);
    out.labels.push_back(labels_to_vector(d.label_ids, num_classes));
  }
  return out;
}

struct TrainArgs {
  std::string features_dir, meta, config_path, out_dir;
};

int run_train(const TrainArgs& a) {
  using namespace soundmix;
  json config = json::object();
  if (!a.config_path.empty()) {
    std::ifstream in(a.config_path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + a.config_path);
    in >> config;
  }
  const TrainConfig tc = train_config_from_json(config.value("train", json::object()));

  const LoadedFeatures data = load_feature_set(a.features_dir, a.meta);
  if (data.inputs.empty()) throw Error(ErrorCode::EmptySplit, "no feature rows loaded");

  ModelConfig mc;
  mc.conv_channels = {16, 32, 64};
  if (config.contains("model")) {
    const json& m = config["model"];
    mc.conv_channels = m.value("conv_channels", mc.conv_channels);
    mc.kernel = m.value("kernel", mc.kernel);
    mc.pool = m.value("pool", mc.pool);
    mc.fc_hidden = m.value("fc_hidden", mc.fc_hidden);
    mc.weight_init_seed = m.value("weight_init_seed", mc.weight_init_seed);
  }
  mc.input_height = static_cast<int>(data.inputs.front().rows);
  mc.input_width = static_cast<int>(data.inputs.front().cols);
  mc.num_classes = static_cast<int>(data.class_names.size());

  fs::create_directories(a.out_dir);
  std::ofstream history(fs::path(a.out_dir) / "history.jsonl", std::ios::trunc);
  const ProgressSink sink = [&history](const EpochRecord& r) {
    ordered_json j{{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss},
                   {"val_accuracy", r.val_accuracy},
                   {"val_macro_f1", r.val_macro_f1}};
    history << j.dump() << "\n";
    history.flush();
    std::cout << "epoch " << r.epoch << "  train loss " << r.train_loss << "  val loss "
              << r.val_loss << "  val acc " << r.val_accuracy << "%  val f1 "
              << r.val_macro_f1 << "\n";
  };

  const TrainResult result = train(data.inputs, data.labels, mc, tc, sink);

  CheckpointExtras extras;
  if (!data.feature_config.is_null()) extras.data["feature"] = data.feature_config;
  if (!result.row_stats.empty()) {
    std::vector<double> means, stds;
    for (const StandardizeStats& s : result.row_stats) {
      means.push_back(s.mean);
      stds.push_back(s.stddev);
    }
    extras.data["standardize"] =
        ordered_json{{"mode", "per_row"}, {"means", means}, {"stds", stds}};
  } else {
    extras.data["standardize"] = ordered_json{
        {"mode", "global"}, {"mean", result.stats.mean}, {"std", result.stats.stddev}};
  }
  extras.data["train"] = train_config_to_json(tc);
  extras.data["class_names"] = data.class_names;
  extras.data["best_epoch"] = result.best_epoch;
  save_checkpoint(result.best_params, (fs::path(a.out_dir) / "checkpoint.smck").string(),
                  extras);

  write_manifest(a.out_dir, "train",
                 ordered_json{{"seed", tc.seed},
                              {"features_dir", a.features_dir},
                              {"meta", a.meta},
                              {"config_path", a.config_path},
                              {"out_dir", a.out_dir}});
  std::cout << "kept epoch " << result.best_epoch << " (best validation loss); checkpoint at "
            << (fs::path(a.out_dir) / "checkpoint.smck").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint, features_dir, meta, out_dir, split = "all";
};

int run_eval(const EvalArgs& a) {
  using namespace soundmix;
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  const LoadedFeatures data = load_feature_set(a.features_dir, a.meta);
  if (data.inputs.empty()) throw Error(ErrorCode::EmptySplit, "no feature rows loaded");
  if (static_cast<int>(data.class_names.size()) != ck.params.cfg.num_classes)
    throw Error(ErrorCode::ShapeMismatch, "metadata class count differs from checkpoint");

  const json& ckj = ck.config;
  const StandardizeSpec stats = standardize_from_json(ckj.at("standardize"));
  const TrainConfig tc = train_config_from_json(ckj.value("train", json::object()));

  std::vector<Mat> inputs = data.inputs;
  for (Mat& m : inputs) apply_standardize(m, stats);

  std::vector<std::size_t> indices;
  if (a.split == "all") {
    indices.resize(inputs.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  } else {
    const SplitIndices s = tc.stratified ? split_dataset_stratified(data.labels, tc)
                                         : split_dataset(inputs.size(), tc);
    indices = a.split == "train" ? s.train : a.split == "val" ? s.val : s.test;
  }

  const EvalReport report =
      evaluate(ck.params, inputs, data.labels, indices, tc.threshold, tc.batch_size);
  const std::string text = report_to_text(report, data.class_names);
  std::cout << text;
  if (a.out_dir.empty()) {
    std::cout << "\n" << report_to_csv(report, data.class_names);
  } else {
    fs::create_directories(a.out_dir);
    std::ofstream csv(fs::path(a.out_dir) / "report.csv", std::ios::trunc);
    csv << report_to_csv(report, data.class_names);
    std::ofstream txt(fs::path(a.out_dir) / "report.txt", std::ios::trunc);
    txt << text;
    write_manifest(a.out_dir, "eval",
                   ordered_json{{"checkpoint", a.checkpoint},
                                {"features_dir", a.features_dir},
                                {"meta", a.meta},
                                {"split", a.split},
                                {"out_dir", a.out_dir}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string checkpoint, wav, plot_out;
  double threshold = -1.0;  // <0: use the checkpoint's
};

void write_prediction_svg(const fs::path& path, const std::vector<std::string>& names,
                          const std::vector<double>& probs, double threshold) {
  const double floor_log = -6.0;
  const int bar_w = 28, gap = 10, plot_h = 280, top = 20, left = 50, bottom = 110;
  const int width = left + static_cast<int>(names.size()) * (bar_w + gap) + 20;
  const int height = top + plot_h + bottom;

  auto bar_height = [&](double p) {
    const double lp = std::max(std::log10(std::max(p, 1e-300)), floor_log);
    return (lp - floor_log) / (0.0 - floor_log) * plot_h;
  };

  std::ofstream out(path, std::ios::trunc);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // log-scale gridlines
  for (int g = 0; g >= static_cast<int>(floor_log); --g) {
    const double y = top + plot_h - bar_height(std::pow(10.0, g));
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 10 << "\" y2=\""
        << y << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">1e" << g
        << "</text>\n";
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double h = bar_height(probs[i]);
    const double x = left + static_cast<double>(i) * (bar_w + gap);
    const bool on = probs[i] >= threshold;
    out << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w
        << "\" height=\"" << h << "\" fill=\"" << (on ? "#ff8c00" : "#87ceeb") << "\"/>\n";
    out << "<text x=\"" << x + bar_w / 2.0 << "\" y=\"" << top + plot_h + 12
        << "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\" transform=\"rotate(-60 "
        << x + bar_w / 2.0 << " " << top + plot_h + 12 << ")\">" << names[i] << "</text>\n";
  }
  const double ty = top + plot_h - bar_height(threshold);
  out << "<line x1=\"" << left << "\" y1=\"" << ty << "\" x2=\"" << width - 10 << "\" y2=\""
      << ty << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  out << "<text x=\"" << width - 12 << "\" y=\"" << ty - 4
      << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">threshold "
      << threshold << "</text>\n";
  out << "</svg>\n";
}

int run_predict(const PredictArgs& a) {
  using namespace soundmix;
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  const json& ckj = ck.config;

  int sample_rate = kCanonicalSampleRate;
  double seconds = kCanonicalDurationS;
  FeatureConfig fc = feature_config_from_json(ckj.value("feature", json::object()),
                                              &sample_rate, &seconds);
  const StandardizeSpec stats = standardize_from_json(ckj.at("standardize"));
  std::vector<std::string> class_names =
      ckj.value("class_names", std::vector<std::string>{});
  while (static_cast<int>(class_names.size()) < ck.params.cfg.num_classes)
    class_names.push_back("class_" + std::to_string(class_names.size()));
  double threshold = a.threshold;
  if (threshold < 0.0)
    threshold = ckj.contains("train") ? ckj["train"].value("threshold", 0.5) : 0.5;

  AudioSegment seg = resample(load_wav(a.wav), sample_rate);
  const std::size_t want = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  if (seg.samples.size() > want)
    seg.samples.resize(want);  // first window; features pad anything shorter

  const MelFilterBank fb = fc.make_filterbank(sample_rate);
  FeatureMatrix feat = extract_feature(seg, fc, fb);
  apply_standardize(feat.values, stats);

  const std::vector<double> probs = predict_proba(ck.params, feat.values.v, 1);

  std::cout << "class,probability,above_threshold\n";
  for (std::size_t i = 0; i < probs.size(); ++i)
    std::cout << class_names[i] << "," << probs[i] << "," << (probs[i] >= threshold) << "\n";

  if (!a.plot_out.empty()) {
    std::ofstream out(a.plot_out, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + a.plot_out);
    out << "class_name,probability,log10_probability,above_threshold\n";
    for (std::size_t i = 0; i < probs.size(); ++i) {
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,%d\n", class_names[i].c_str(), probs[i],
                    std::log10(std::max(probs[i], 1e-300)), probs[i] >= threshold ? 1 : 0);
      out << line;
    }
    write_prediction_svg(replace_extension(a.plot_out, ".svg"), class_names, probs, threshold);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

int run_inspect(const std::string& meta) {
  using namespace soundmix;
  const std::vector<SampleDescriptor> rows = read_metadata(meta, 0);
  const DatasetSummary s = summarize_dataset(rows);
  std::cout << "segments: " << s.total_segments << "\n";
  std::cout << "classes: " << s.per_class.size() << "\n";
  std::cout << "folds: " << s.folds.size() << "\n";
  for (const auto& [id, count] : s.per_class)
    std::cout << "  class " << id << ": " << count << " segments\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soundmix: multilabel environmental-sound classification pipeline"};
  app.require_subcommand(1);

  MixArgs mix_args;
  CLI::App* mix = app.add_subcommand("mix", "generate a mixed-audio corpus from a class pool");
  mix->add_option("--pool", mix_args.pool_dir, "pool directory (one subdirectory per class)")
      ->required();
  mix->add_option("--mode", mix_args.mode, "fixed3 or variable")
      ->check(CLI::IsMember({"fixed3", "variable"}));
  mix->add_option("--count", mix_args.count, "number of mixed samples");
  mix->add_option("--folds", mix_args.folds, "number of folds");
  mix->add_option("--min-components", mix_args.min_components,
                  "variable mode: fewest sources per mix");
  mix->add_option("--max-components", mix_args.max_components,
                  "variable mode: most sources per mix");
  mix->add_option("--seed", mix_args.seed, "rng seed");
  mix->add_option("--rate", mix_args.sample_rate, "canonical sample rate");
  mix->add_option("--seconds", mix_args.seconds, "segment duration");
  mix->add_option("--out", mix_args.out_dir, "output directory")->required();

  FeaturizeArgs feat_args;
  CLI::App* feat = app.add_subcommand("featurize", "extract features for a mixed corpus");
  feat->add_option("--in", feat_args.in_dir, "mix output directory")->required();
  feat->add_option("--meta", feat_args.meta, "metadata CSV (default: <in>/metadata.csv)");
  feat->add_option("--feature", feat_args.feature, "melspec or mfcc")
      ->check(CLI::IsMember({"melspec", "mfcc"}));
  feat->add_option("--out", feat_args.out_dir, "output directory")->required();
  feat->add_flag("--png", feat_args.png, "also export grayscale PNGs");
  feat->add_option("--n-fft", feat_args.fc.n_fft, "FFT size");
  feat->add_option("--hop", feat_args.fc.hop, "hop size");
  feat->add_option("--n-mels", feat_args.fc.n_mels, "Mel bands");
  feat->add_option("--f-min", feat_args.fc.f_min, "lowest filter frequency");
  feat->add_option("--f-max", feat_args.fc.f_max, "highest filter frequency");
  feat->add_option("--coeffs", feat_args.fc.n_coeffs, "MFCC coefficients");
  feat->add_option("--frames", feat_args.fc.target_frames, "pad/truncate frame count");
  feat->add_option("--size", feat_args.fc.image_size, "square model input size");

  TrainArgs train_args;
  CLI::App* tr = app.add_subcommand("train", "train the CNN on extracted features");
  tr->add_option("--features", train_args.features_dir, "featurize output directory")->required();
  tr->add_option("--meta", train_args.meta, "metadata CSV")->required();
  tr->add_option("--config", train_args.config_path, "JSON config file");
  tr->add_option("--out", train_args.out_dir, "output directory")->required();

  EvalArgs eval_args;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a labeled feature set");
  ev->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  ev->add_option("--features", eval_args.features_dir, "featurize output directory")->required();
  ev->add_option("--meta", eval_args.meta, "metadata CSV")->required();
  ev->add_option("--split", eval_args.split, "all, train, val or test")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  ev->add_option("--out", eval_args.out_dir, "report output directory");

  PredictArgs pred_args;
  CLI::App* pr = app.add_subcommand("predict", "classify one WAV and export plot data");
  pr->add_option("--checkpoint", pred_args.checkpoint, "checkpoint file")->required();
  pr->add_option("--wav", pred_args.wav, "input WAV")->required();
  pr->add_option("--plot-out", pred_args.plot_out, "plot data CSV (SVG written alongside)");
  pr->add_option("--threshold", pred_args.threshold, "override decision threshold");

  std::string inspect_meta;
  CLI::App* insp = app.add_subcommand("inspect", "summarize a metadata CSV");
  insp->add_option("--meta", inspect_meta, "metadata CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  }

  try {
    if (mix->parsed()) return run_mix(mix_args);
    if (feat->parsed()) return run_featurize(feat_args);
    if (tr->parsed()) return run_train(train_args);
    if (ev->parsed()) return run_eval(eval_args);
    if (pr->parsed()) return run_predict(pred_args);
    if (insp->parsed()) return run_inspect(inspect_meta);
  } catch (const soundmix::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool numeric = e.code() == soundmix::ErrorCode::NonFiniteLoss ||
                         e.code() == soundmix::ErrorCode::DegenerateStd;
    return numeric ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
