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
// The multilabel CNN: stacked [3x3 same-pad conv -> ReLU -> 2x2 max pool]
// blocks, a 128-unit hidden dense layer, and a raw-logit output head
// trained with fused sigmoid + binary cross-entropy. Forward and backward
// passes are handwritten; gradients are exact and finite-difference checked.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soundmix/error.hpp"
#include "soundmix/rng.hpp"

namespace soundmix {

struct ModelConfig {
  int input_height = 128;
  int input_width = 128;  // one input channel, always
  std::vector<int> conv_channels{64, 128, 256, 512};
  int kernel = 3;  // odd, same padding
  int pool = 2;    // 2x2 max pool, stride 2, after every conv block
  int fc_hidden = 128;
  int num_classes = 0;
  std::uint64_t weight_init_seed = 0;

  int num_blocks() const { return static_cast<int>(conv_channels.size()); }

  int final_height() const { return input_height >> num_blocks(); }
  int final_width() const { return input_width >> num_blocks(); }
  int flatten_size() const {
    return conv_channels.empty() ? input_height * input_width
                                 : conv_channels.back() * final_height() * final_width();
  }

  void validate() const {
    if (num_classes <= 0)
      throw Error(ErrorCode::InvalidArgument, "model: num_classes must be positive");
    if (conv_channels.empty())
      throw Error(ErrorCode::InvalidArgument, "model: need at least one conv block");
    for (int c : conv_channels)
      if (c <= 0) throw Error(ErrorCode::InvalidArgument, "model: bad channel count");
    if (kernel < 1 || kernel % 2 == 0)
      throw Error(ErrorCode::InvalidArgument, "model: kernel must be odd");
    if (pool != 2) throw Error(ErrorCode::InvalidArgument, "model: pool is fixed at 2");
    if (fc_hidden <= 0) throw Error(ErrorCode::InvalidArgument, "model: bad fc_hidden");
    const int div = 1 << num_blocks();
    if (input_height % div != 0 || input_width % div != 0 || final_height() == 0 ||
        final_width() == 0)
      throw Error(ErrorCode::InvalidArgument,
                  "model: input must be divisible by 2^blocks with room to pool");
  }

  bool operator==(const ModelConfig&) const = default;
};

struct ConvLayer {
  int in_ch = 0, out_ch = 0, kernel = 3;
  std::vector<double> w;  // [out_ch][in_ch][kernel][kernel]
  std::vector<double> b;  // [out_ch]
};

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;  // [out]
};

struct ModelParams {
  ModelConfig cfg;
  std::vector<ConvLayer> conv;
  DenseLayer fc1, fc2;
};

/// Named view over every parameter tensor, in checkpoint declaration order.
struct TensorView {
  std::string name;
  std::vector<double>* data;
};

inline std::vector<TensorView> tensor_views(ModelParams& p) {
  std::vector<TensorView> out;
  for (std::size_t i = 0; i < p.conv.size(); ++i) {
    out.push_back({"conv" + std::to_string(i + 1) + ".w", &p.conv[i].w});
    out.push_back({"conv" + std::to_string(i + 1) + ".b", &p.conv[i].b});
  }
  out.push_back({"fc1.w", &p.fc1.w});
  out.push_back({"fc1.b", &p.fc1.b});
  out.push_back({"fc2.w", &p.fc2.w});
  out.push_back({"fc2.b", &p.fc2.b});
  return out;
}

/// Zero-filled parameter set with the shapes the config dictates.
inline ModelParams zero_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.cfg = cfg;
  int in_ch = 1;
  for (int out_ch : cfg.conv_channels) {
    ConvLayer l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.kernel = cfg.kernel;
    l.w.assign(static_cast<std::size_t>(out_ch) * in_ch * cfg.kernel * cfg.kernel, 0.0);
    l.b.assign(static_cast<std::size_t>(out_ch), 0.0);
    p.conv.push_back(std::move(l));
    in_ch = out_ch;
  }
  p.fc1.in = cfg.flatten_size();
  p.fc1.out = cfg.fc_hidden;
  p.fc1.w.assign(static_cast<std::size_t>(p.fc1.out) * p.fc1.in, 0.0);
  p.fc1.b.assign(static_cast<std::size_t>(p.fc1.out), 0.0);
  p.fc2.in = cfg.fc_hidden;
  p.fc2.out = cfg.num_classes;
  p.fc2.w.assign(static_cast<std::size_t>(p.fc2.out) * p.fc2.in, 0.0);
  p.fc2.b.assign(static_cast<std::size_t>(p.fc2.out), 0.0);
  return p;
}

/// He-uniform initialization, bound sqrt(6/fan_in), biases zero.
/// Deterministic per seed.
inline ModelParams init_params(const ModelConfig& cfg) {
  ModelParams p = zero_params(cfg);
  std::mt19937_64 rng(cfg.weight_init_seed);
  auto fill = [&rng](std::vector<double>& w, int fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& x : w) x = uniform_real(rng, -bound, bound);
  };
  for (ConvLayer& l : p.conv) fill(l.w, l.in_ch * l.kernel * l.kernel);
  fill(p.fc1.w, p.fc1.in);
  fill(p.fc2.w, p.fc2.in);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward.

/// Activations retained for the backward pass. block_in[0] is the input
/// batch; block_in[i+1] is the pooled output of block i (the last one is
/// also the flattened dense input).
struct ForwardCache {
  int batch = 0;
  const ModelParams* owner = nullptr;
  std::vector<std::vector<double>> block_in;
  std::vector<std::vector<double>> relu_out;   // post-ReLU, pre-pool
  std::vector<std::vector<std::int32_t>> pool_arg;  // in-plane argmax per pooled cell
  std::vector<double> fc1_act;                 // post-ReLU hidden
  std::vector<double> logits;
};

namespace detail {

/// Same-padded stride-1 convolution of one plane pair: out += w_k * in
/// shifted by (ky, kx), zeros outside. Row-wise so the inner loop is
/// contiguous.
inline void conv2d_accum(const double* in, double* out, int h, int w, double wk, int ky,
                         int kx) {
  const int y0 = std::max(0, -ky), y1 = std::min(h, h - ky);
  const int x0 = std::max(0, -kx), x1 = std::min(w, w - kx);
  for (int y = y0; y < y1; ++y) {
    const double* src = in + (y + ky) * w + (x0 + kx);
    double* dst = out + y * w + x0;
    const int n = x1 - x0;
    for (int i = 0; i < n; ++i) dst[i] += wk * src[i];
  }
}

/// Correlation reduction for weight gradients:
/// sum over the valid region of grad[y][x] * in[y+ky][x+kx].
inline double conv2d_reduce(const double* in, const double* grad, int h, int w, int ky,
                            int kx) {
  const int y0 = std::max(0, -ky), y1 = std::min(h, h - ky);
  const int x0 = std::max(0, -kx), x1 = std::min(w, w - kx);
  double acc = 0.0;
  for (int y = y0; y < y1; ++y) {
    const double* src = in + (y + ky) * w + (x0 + kx);
    const double* g = grad + y * w + x0;
    const int n = x1 - x0;
    for (int i = 0; i < n; ++i) acc += g[i] * src[i];
  }
  return acc;
}

}  // namespace detail

/// Run the network on a [batch x 1 x H x W] input. Returns raw logits
/// [batch x C]; with a cache supplied, retains what backward() needs.
inline std::vector<double> forward(const ModelParams& params, std::span<const double> batch,
                                   int batch_size, ForwardCache* cache = nullptr) {
  const ModelConfig& cfg = params.cfg;
  const std::size_t plane_in = static_cast<std::size_t>(cfg.input_height) * cfg.input_width;
  if (batch_size <= 0 || batch.size() != plane_in * static_cast<std::size_t>(batch_size))
    throw Error(ErrorCode::ShapeMismatch, "forward: batch size does not match input shape");
  for (double x : batch)
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "forward: non-finite input");

  const int kernel = cfg.kernel;
  const int khalf = kernel / 2;
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.batch = batch_size;
  c.owner = &params;
  c.block_in.resize(params.conv.size() + 1);
  c.relu_out.resize(params.conv.size());
  c.pool_arg.resize(params.conv.size());
  c.block_in[0].assign(batch.begin(), batch.end());

  int h = cfg.input_height, w = cfg.input_width;
  for (std::size_t li = 0; li < params.conv.size(); ++li) {
    const ConvLayer& l = params.conv[li];
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = in_plane;  // same padding
    const int ph = h / 2, pw = w / 2;
    const std::size_t pooled_plane = static_cast<std::size_t>(ph) * pw;

    std::vector<double>& act = c.relu_out[li];
    act.assign(static_cast<std::size_t>(batch_size) * l.out_ch * out_plane, 0.0);
    std::vector<std::int32_t>& arg = c.pool_arg[li];
    arg.assign(static_cast<std::size_t>(batch_size) * l.out_ch * pooled_plane, 0);
    std::vector<double>& pooled = c.block_in[li + 1];
    pooled.assign(static_cast<std::size_t>(batch_size) * l.out_ch * pooled_plane, 0.0);

    const std::vector<double>& in = c.block_in[li];
    for (int b = 0; b < batch_size; ++b) {
      const double* in_b = in.data() + static_cast<std::size_t>(b) * l.in_ch * in_plane;
      double* act_b = act.data() + static_cast<std::size_t>(b) * l.out_ch * out_plane;
      for (int oc = 0; oc < l.out_ch; ++oc) {
        double* plane = act_b + static_cast<std::size_t>(oc) * out_plane;
        std::fill_n(plane, out_plane, l.b[static_cast<std::size_t>(oc)]);
        for (int ic = 0; ic < l.in_ch; ++ic) {
          const double* src = in_b + static_cast<std::size_t>(ic) * in_plane;
          const double* wk =
              l.w.data() + (static_cast<std::size_t>(oc) * l.in_ch + ic) * kernel * kernel;
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx)
              detail::conv2d_accum(src, plane, h, w, wk[ky * kernel + kx], ky - khalf,
                                   kx - khalf);
        }
        // ReLU then 2x2 max pool, first-occurrence tie-break in row-major order
        for (std::size_t i = 0; i < out_plane; ++i) plane[i] = std::max(plane[i], 0.0);
        double* pooled_plane_ptr =
            pooled.data() + (static_cast<std::size_t>(b) * l.out_ch + oc) * pooled_plane;
        std::int32_t* arg_plane =
            arg.data() + (static_cast<std::size_t>(b) * l.out_ch + oc) * pooled_plane;
        for (int py = 0; py < ph; ++py)
          for (int px = 0; px < pw; ++px) {
            const int y = 2 * py, x = 2 * px;
            std::int32_t best = y * w + x;
            double best_v = plane[best];
            const std::int32_t cand[3] = {y * w + x + 1, (y + 1) * w + x, (y + 1) * w + x + 1};
            for (std::int32_t idx : cand)
              if (plane[idx] > best_v) {
                best_v = plane[idx];
                best = idx;
              }
            pooled_plane_ptr[py * pw + px] = best_v;
            arg_plane[py * pw + px] = best;
          }
      }
    }
    h = ph;
    w = pw;
  }

  // dense head
  const std::vector<double>& flat = c.block_in.back();
  const int flat_size = cfg.flatten_size();
  c.fc1_act.assign(static_cast<std::size_t>(batch_size) * cfg.fc_hidden, 0.0);
  c.logits.assign(static_cast<std::size_t>(batch_size) * cfg.num_classes, 0.0);
  for (int b = 0; b < batch_size; ++b) {
    const double* x = flat.data() + static_cast<std::size_t>(b) * flat_size;
    double* hdn = c.fc1_act.data() + static_cast<std::size_t>(b) * cfg.fc_hidden;
    for (int o = 0; o < cfg.fc_hidden; ++o) {
      const double* wrow = params.fc1.w.data() + static_cast<std::size_t>(o) * flat_size;
      double acc = params.fc1.b[static_cast<std::size_t>(o)];
      for (int i = 0; i < flat_size; ++i) acc += wrow[i] * x[i];
      hdn[o] = std::max(acc, 0.0);
    }
    double* z = c.logits.data() + static_cast<std::size_t>(b) * cfg.num_classes;
    for (int o = 0; o < cfg.num_classes; ++o) {
      const double* wrow = params.fc2.w.data() + static_cast<std::size_t>(o) * cfg.fc_hidden;
      double acc = params.fc2.b[static_cast<std::size_t>(o)];
      for (int i = 0; i < cfg.fc_hidden; ++i) acc += wrow[i] * hdn[i];
      z[o] = acc;
    }
  }
  return c.logits;
}

/// Numerically stable logistic function. The result is kept inside the
/// open interval (0, 1): where exp underflows, the nearest representable
/// neighbor of the limit is returned instead of 0 or 1.
inline double sigmoid(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  if (s <= 0.0) return std::numeric_limits<double>::denorm_min();
  if (s >= 1.0) return std::nextafter(1.0, 0.0);
  return s;
}

struct LossResult {
  double loss = 0.0;
  std::vector<double> dlogits;  // dLoss/dLogits, mean reduction baked in
};

/// Fused sigmoid + binary cross-entropy, mean over all batch*classes
/// elements. Per element: max(z,0) - z*t + log(1 + exp(-|z|)), which stays
/// finite for arbitrarily large |z|. Gradient: (sigmoid(z) - t) / (B*C).
inline LossResult bce_with_logits(std::span<const double> logits,
                                  std::span<const double> targets) {
  if (logits.size() != targets.size() || logits.empty())
    throw Error(ErrorCode::ShapeMismatch, "bce: logits/targets size mismatch");
  LossResult r;
  r.dlogits.resize(logits.size());
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double t = targets[i];
    if (t != 0.0 && t != 1.0)
      throw Error(ErrorCode::InvalidTarget, "bce: targets must be 0 or 1");
    const double z = logits[i];
    acc += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
    r.dlogits[i] = (sigmoid(z) - t) * inv_n;
  }
  r.loss = acc * inv_n;
  return r;
}

/// Exact gradients of the composed forward pass given dLoss/dLogits.
/// ReLU uses subgradient 0 at 0; max-pool routes to the recorded argmax.
inline ModelParams backward(const ModelParams& params, const ForwardCache& cache,
                            std::span<const double> dlogits) {
  const ModelConfig& cfg = params.cfg;
  if (cache.owner != &params || cache.batch <= 0 ||
      cache.block_in.size() != params.conv.size() + 1)
    throw Error(ErrorCode::StaleCache, "backward: cache does not match these parameters");
  if (dlogits.size() != static_cast<std::size_t>(cache.batch) * cfg.num_classes)
    throw Error(ErrorCode::ShapeMismatch, "backward: dlogits shape mismatch");

  ModelParams grads = zero_params(cfg);
  const int batch = cache.batch;
  const int flat_size = cfg.flatten_size();

  // dense head
  std::vector<double> dflat(static_cast<std::size_t>(batch) * flat_size, 0.0);
  {
    std::vector<double> dhidden(static_cast<std::size_t>(batch) * cfg.fc_hidden, 0.0);
    for (int b = 0; b < batch; ++b) {
      const double* dz = dlogits.data() + static_cast<std::size_t>(b) * cfg.num_classes;
      const double* hdn = cache.fc1_act.data() + static_cast<std::size_t>(b) * cfg.fc_hidden;
      double* dh = dhidden.data() + static_cast<std::size_t>(b) * cfg.fc_hidden;
      for (int o = 0; o < cfg.num_classes; ++o) {
        const double g = dz[o];
        grads.fc2.b[static_cast<std::size_t>(o)] += g;
        double* dwrow = grads.fc2.w.data() + static_cast<std::size_t>(o) * cfg.fc_hidden;
        const double* wrow = params.fc2.w.data() + static_cast<std::size_t>(o) * cfg.fc_hidden;
        for (int i = 0; i < cfg.fc_hidden; ++i) {
          dwrow[i] += g * hdn[i];
          dh[i] += g * wrow[i];
        }
      }
      const double* x = cache.block_in.back().data() + static_cast<std::size_t>(b) * flat_size;
      double* dx = dflat.data() + static_cast<std::size_t>(b) * flat_size;
      for (int o = 0; o < cfg.fc_hidden; ++o) {
        if (hdn[o] <= 0.0) continue;  // ReLU gate
        const double g = dh[o];
        grads.fc1.b[static_cast<std::size_t>(o)] += g;
        double* dwrow = grads.fc1.w.data() + static_cast<std::size_t>(o) * flat_size;
        const double* wrow = params.fc1.w.data() + static_cast<std::size_t>(o) * flat_size;
        for (int i = 0; i < flat_size; ++i) {
          dwrow[i] += g * x[i];
          dx[i] += g * wrow[i];
        }
      }
    }
  }

  // conv blocks, last to first
  const int kernel = cfg.kernel;
  const int khalf = kernel / 2;
  std::vector<double> dpooled = std::move(dflat);
  for (int li = static_cast<int>(params.conv.size()) - 1; li >= 0; --li) {
    const ConvLayer& l = params.conv[static_cast<std::size_t>(li)];
    ConvLayer& gl = grads.conv[static_cast<std::size_t>(li)];
    const int h = cfg.input_height >> li, w = cfg.input_width >> li;
    const int ph = h / 2, pw = w / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t pooled_plane = static_cast<std::size_t>(ph) * pw;
    const std::vector<double>& in = cache.block_in[static_cast<std::size_t>(li)];
    const std::vector<double>& act = cache.relu_out[static_cast<std::size_t>(li)];
    const std::vector<std::int32_t>& arg = cache.pool_arg[static_cast<std::size_t>(li)];

    // un-pool then gate through ReLU
    std::vector<double> dact(act.size(), 0.0);
    for (int b = 0; b < batch; ++b)
      for (int oc = 0; oc < l.out_ch; ++oc) {
        const std::size_t po = (static_cast<std::size_t>(b) * l.out_ch + oc) * pooled_plane;
        const std::size_t ao = (static_cast<std::size_t>(b) * l.out_ch + oc) * plane;
        for (std::size_t i = 0; i < pooled_plane; ++i) {
          const std::size_t target = ao + static_cast<std::size_t>(arg[po + i]);
          if (act[target] > 0.0) dact[target] += dpooled[po + i];
        }
      }

    const bool need_dinput = li > 0;
    std::vector<double> dinput;
    if (need_dinput) dinput.assign(in.size(), 0.0);
    for (int b = 0; b < batch; ++b) {
      const double* in_b = in.data() + static_cast<std::size_t>(b) * l.in_ch * plane;
      const double* dact_b = dact.data() + static_cast<std::size_t>(b) * l.out_ch * plane;
      double* din_b =
          need_dinput ? dinput.data() + static_cast<std::size_t>(b) * l.in_ch * plane : nullptr;
      for (int oc = 0; oc < l.out_ch; ++oc) {
        const double* g = dact_b + static_cast<std::size_t>(oc) * plane;
        for (std::size_t i = 0; i < plane; ++i) gl.b[static_cast<std::size_t>(oc)] += g[i];
        for (int ic = 0; ic < l.in_ch; ++ic) {
          const double* src = in_b + static_cast<std::size_t>(ic) * plane;
          const std::size_t wo = (static_cast<std::size_t>(oc) * l.in_ch + ic) *
                                 static_cast<std::size_t>(kernel) * kernel;
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx)
              gl.w[wo + static_cast<std::size_t>(ky) * kernel + kx] +=
                  detail::conv2d_reduce(src, g, h, w, ky - khalf, kx - khalf);
          if (need_dinput) {
            double* dst = din_b + static_cast<std::size_t>(ic) * plane;
            // transposed convolution: flip the kernel offsets
            for (int ky = 0; ky < kernel; ++ky)
              for (int kx = 0; kx < kernel; ++kx)
                detail::conv2d_accum(
                    g, dst, h, w,
                    params.conv[static_cast<std::size_t>(li)]
                        .w[wo + static_cast<std::size_t>(ky) * kernel + kx],
                    khalf - ky, khalf - kx);
          }
        }
      }
    }
    dpooled = std::move(dinput);
  }
  return grads;
}

/// sigmoid(forward logits); monotone in the logits.
inline std::vector<double> predict_proba(const ModelParams& params,
                                         std::span<const double> batch, int batch_size) {
  std::vector<double> probs = forward(params, batch, batch_size);
  for (double& z : probs) z = sigmoid(z);
  return probs;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "SMCK", u32 JSON length, config JSON, then every
// parameter tensor as little-endian 32-bit floats in declaration order.

inline constexpr char kCheckpointMagic[4] = {'S', 'M', 'C', 'K'};

inline nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::ordered_json{{"input_height", cfg.input_height},
                                {"input_width", cfg.input_width},
                                {"conv_channels", cfg.conv_channels},
                                {"kernel", cfg.kernel},
                                {"pool", cfg.pool},
                                {"fc_hidden", cfg.fc_hidden},
                                {"num_classes", cfg.num_classes},
                                {"weight_init_seed", cfg.weight_init_seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.input_height = j.at("input_height").get<int>();
  cfg.input_width = j.at("input_width").get<int>();
  cfg.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  cfg.kernel = j.at("kernel").get<int>();
  cfg.pool = j.at("pool").get<int>();
  cfg.fc_hidden = j.at("fc_hidden").get<int>();
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.weight_init_seed = j.at("weight_init_seed").get<std::uint64_t>();
  return cfg;
}

/// Extra pipeline state a checkpoint carries beyond the weights, so that
/// prediction on raw audio reproduces training-time preprocessing.
struct CheckpointExtras {
  nlohmann::ordered_json data = nlohmann::ordered_json::object();
};

inline void save_checkpoint(const ModelParams& params, const std::string& path,
                            const CheckpointExtras& extras = {}) {
  nlohmann::ordered_json j;
  j["model"] = model_config_to_json(params.cfg);
  for (auto& [k, v] : extras.data.items()) j[k] = v;
  const std::string js = j.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + path);
  out.write(kCheckpointMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(js.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(js.data(), static_cast<std::streamsize>(js.size()));
  for (const TensorView& t : tensor_views(const_cast<ModelParams&>(params))) {
    std::vector<float> buf(t.data->size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>((*t.data)[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on " + path);
}

struct LoadedCheckpoint {
  ModelParams params;
  nlohmann::json config;  // full JSON block, including any extras
};

/// Load and validate a checkpoint. Rejects wrong magic, malformed config,
/// and payloads whose tensor sizes disagree with the config.
inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  char magic[4];
  std::uint32_t len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&len), 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw Error(ErrorCode::MalformedContainer, path + ": not a checkpoint file");
  std::string js(len, '\0');
  in.read(js.data(), len);
  if (!in) throw Error(ErrorCode::MalformedContainer, path + ": truncated config block");

  LoadedCheckpoint ck;
  try {
    ck.config = nlohmann::json::parse(js);
    ck.params = zero_params(model_config_from_json(ck.config.at("model")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedContainer, path + ": bad config JSON: " + e.what());
  }
  for (const TensorView& t : tensor_views(ck.params)) {
    std::vector<float> buf(t.data->size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in)
      throw Error(ErrorCode::ShapeMismatch,
                  path + ": tensor " + t.name + " truncated (config mismatch)");
    for (std::size_t i = 0; i < buf.size(); ++i) (*t.data)[i] = buf[i];
  }
  in.peek();
  if (!in.eof())
    throw Error(ErrorCode::ShapeMismatch, path + ": trailing data (config mismatch)");
  return ck;
}

}  // namespace soundmix
