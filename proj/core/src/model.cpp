/* Copyright 2026 The spillsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "spillsim/model.hpp"

#include <cmath>
#include <string>

#include "spillsim/errors.hpp"

namespace spillsim {

namespace {

// Largest double that still represents every integer exactly.
constexpr double kMaxExactBytes = 9007199254740992.0;  // 2^53

void check_bytes(double v, const char* what) {
  if (!std::isfinite(v) || v > kMaxExactBytes) {
    throw ByteOverflow(std::string(what) + " overflows byte arithmetic");
  }
}

}  // namespace

LayerProfile make_layer(double param_bytes, double activation_out_bytes,
                        double workspace_bytes, double fwd_compute_s) {
  LayerProfile layer;
  layer.param_bytes = param_bytes;
  layer.activation_out_bytes = activation_out_bytes;
  layer.workspace_bytes = workspace_bytes;
  layer.fwd_compute_s = fwd_compute_s;
  layer.bwd_compute_s = 2.0 * fwd_compute_s;
  return layer;
}

double pilot_footprint(const LayerProfile& layer) {
  // params + gradients + activation + activation gradient + scratch; what a
  // probing forward/backward pass holds without releasing memory.
  return 2.0 * layer.param_bytes + 2.0 * layer.activation_out_bytes +
         layer.workspace_bytes;
}

double ModelProfile::total_param_bytes() const {
  double sum = 0;
  for (const auto& l : layers) sum += l.param_bytes;
  return sum;
}

double ModelProfile::total_fwd_compute_s() const {
  double sum = 0;
  for (const auto& l : layers) sum += l.fwd_compute_s;
  return sum;
}

double ModelProfile::total_bwd_compute_s() const {
  double sum = 0;
  for (const auto& l : layers) sum += l.bwd_compute_s;
  return sum;
}

double ModelProfile::total_pilot_footprint() const {
  double sum = 0;
  for (const auto& l : layers) sum += pilot_footprint(l);
  return sum;
}

void validate(const ModelProfile& model) {
  if (model.layers.empty()) {
    throw InvalidArgument("model '" + model.name + "' has no layers");
  }
  if (!(model.input_batch_bytes >= 0) ||
      !std::isfinite(model.input_batch_bytes)) {
    throw InvalidArgument("model '" + model.name + "': bad input_batch_bytes");
  }
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    const std::string where =
        "model '" + model.name + "' layer " + std::to_string(i);
    auto nonneg = [&](double v, const char* f) {
      if (!(v >= 0) || !std::isfinite(v)) {
        throw InvalidArgument(where + ": " + f + " must be finite and >= 0");
      }
    };
    nonneg(l.param_bytes, "param_bytes");
    nonneg(l.activation_out_bytes, "activation_out_bytes");
    nonneg(l.workspace_bytes, "workspace_bytes");
    nonneg(l.fwd_compute_s, "fwd_compute_s");
    nonneg(l.bwd_compute_s, "bwd_compute_s");
    if (!(l.fwd_compute_s > 0)) {
      throw InvalidArgument(where + ": fwd_compute_s must be > 0");
    }
    if (!(pilot_footprint(l) > 0) || !std::isfinite(pilot_footprint(l))) {
      throw InvalidArgument(where + ": pilot footprint must be finite and > 0");
    }
  }
}

void validate(const ClusterSpec& cluster) {
  if (cluster.devices.empty()) {
    throw InvalidArgument("cluster has no devices");
  }
  if (!(cluster.host_dram_bytes > 0)) {
    throw InvalidArgument("host_dram_bytes must be > 0");
  }
  for (const auto& d : cluster.devices) {
    if (!(d.mem_bytes > 0)) {
      throw InvalidArgument("device " + d.device_id + ": mem_bytes must be > 0");
    }
    if (!(d.compute_scale > 0)) {
      throw InvalidArgument("device " + d.device_id +
                            ": compute_scale must be > 0");
    }
    if (!(d.busy_power_w >= d.idle_power_w) || !(d.idle_power_w >= 0)) {
      throw InvalidArgument("device " + d.device_id +
                            ": need busy_power_w >= idle_power_w >= 0");
    }
  }
  auto check_link = [](const InterconnectSpec& link, const char* name) {
    if (!(link.bandwidth_Bps > 0)) {
      throw InvalidArgument(std::string(name) + ": bandwidth_Bps must be > 0");
    }
    if (!(link.latency_s >= 0)) {
      throw InvalidArgument(std::string(name) + ": latency_s must be >= 0");
    }
  };
  check_link(cluster.h2d, "h2d");
  if (cluster.d2d) check_link(*cluster.d2d, "d2d");
}

void validate(const ModelJob& job) {
  validate(job.model);
  if (job.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (job.minibatches_per_epoch < 1) {
    throw InvalidArgument("minibatches_per_epoch must be >= 1");
  }
}

ModelProfile make_uniform_model(int n_layers, const LayerProfile& per_layer,
                                double input_batch_bytes,
                                const std::string& name) {
  if (n_layers < 1) {
    throw InvalidArgument("uniform model needs at least 1 layer");
  }
  ModelProfile model;
  model.name = name;
  model.input_batch_bytes = input_batch_bytes;
  model.layers.assign(static_cast<size_t>(n_layers), per_layer);
  validate(model);
  return model;
}

ModelProfile make_transformer_model(const TransformerParams& p) {
  if (p.n_blocks < 1 || p.d_model < 1 || p.seq_len < 1 || p.batch_size < 1 ||
      p.bytes_per_param < 1 || p.device_reference_flops < 1) {
    throw InvalidArgument("transformer generator inputs must all be >= 1");
  }
  const double b = p.batch_size;
  const double s = p.seq_len;
  const double d = p.d_model;
  const double bpp = p.bytes_per_param;
  const double heads = std::max(1.0, std::floor(d / 64.0));

  ModelProfile model;
  model.name = p.name;
  model.input_batch_bytes = b * s * 4;  // int32 token ids

  // Embedding: vocab x d table, negligible flops relative to the blocks.
  LayerProfile embed;
  embed.param_bytes = double(kTransformerVocab) * d * bpp;
  embed.activation_out_bytes = b * s * d * bpp;
  embed.workspace_bytes = 0;
  embed.fwd_compute_s = (b * s * d) / p.device_reference_flops;
  embed.bwd_compute_s = 2.0 * embed.fwd_compute_s;
  check_bytes(embed.param_bytes, "embedding params");
  model.layers.push_back(embed);

  LayerProfile block;
  block.param_bytes = 12.0 * d * d * bpp;
  block.activation_out_bytes = b * s * d * bpp;
  block.workspace_bytes = b * heads * s * s * bpp;  // attention score matrix
  const double block_fwd_flops = 24.0 * b * s * d * d + 4.0 * b * s * s * d;
  block.fwd_compute_s = block_fwd_flops / p.device_reference_flops;
  block.bwd_compute_s = 2.0 * block.fwd_compute_s;
  check_bytes(block.param_bytes, "block params");
  check_bytes(block.workspace_bytes, "block workspace");
  for (int i = 0; i < p.n_blocks; ++i) model.layers.push_back(block);

  // LM head, weight-tied to the embedding: no extra params, a b*s*d*vocab
  // matmul and a transient logits buffer.
  LayerProfile head;
  head.param_bytes = 0;
  head.activation_out_bytes = 0;  // loss folded in; nothing crosses a boundary
  head.workspace_bytes = b * s * double(kTransformerVocab) * bpp;
  head.fwd_compute_s =
      (2.0 * b * s * d * double(kTransformerVocab)) / p.device_reference_flops;
  head.bwd_compute_s = 2.0 * head.fwd_compute_s;
  check_bytes(head.workspace_bytes, "head workspace");
  model.layers.push_back(head);

  check_bytes(model.total_param_bytes(), "total params");
  validate(model);
  return model;
}

}  // namespace spillsim
