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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spillsim {

/// Per-layer memory footprint components and compute durations. The unit of
/// partitioning. Byte quantities are doubles: microbatch splits divide them,
/// and whole-model sizes stay far below 2^53 so integer values are exact.
struct LayerProfile {
  double param_bytes = 0;
  double activation_out_bytes = 0;  // boundary output for one minibatch
  double workspace_bytes = 0;       // transient scratch during fwd+bwd
  double fwd_compute_s = 0;
  double bwd_compute_s = 0;
};

/// Convenience constructor applying the default backward cost convention
/// (bwd = 2 * fwd) when no explicit backward duration is known.
LayerProfile make_layer(double param_bytes, double activation_out_bytes,
                        double workspace_bytes, double fwd_compute_s);

/// Memory a probing forward+backward pass through one layer would hold
/// without releasing anything: params + gradients + activation +
/// activation gradient + scratch.
double pilot_footprint(const LayerProfile& layer);

/// A chain of layers plus the bytes the input minibatch occupies on device.
struct ModelProfile {
  std::string name;
  std::vector<LayerProfile> layers;
  double input_batch_bytes = 0;

  double total_param_bytes() const;
  double total_fwd_compute_s() const;
  double total_bwd_compute_s() const;
  double total_pilot_footprint() const;
};

/// Throws InvalidArgument unless the profile satisfies the chain-model
/// invariants (non-empty, finite non-negative fields, fwd > 0 per layer,
/// positive pilot footprints).
void validate(const ModelProfile& model);

struct DeviceSpec {
  std::string device_id;
  double mem_bytes = 0;
  double compute_scale = 1.0;  // multiplier on compute durations; 1 = reference
  double busy_power_w = 0;
  double idle_power_w = 0;
  double hourly_price = 0;
};

struct InterconnectSpec {
  double bandwidth_Bps = 0;
  double latency_s = 0;
  bool duplex = true;  // full duplex: independent up/down channels
  bool shared = false; // one channel contended by all devices
};

struct ClusterSpec {
  std::vector<DeviceSpec> devices;
  double host_dram_bytes = 0;
  InterconnectSpec h2d;
  std::optional<InterconnectSpec> d2d;  // absent = no direct device-device path
};

void validate(const ClusterSpec& cluster);

/// A model plus its training plan. Hyperparameters are opaque metadata with
/// no timing effect; batch size is already baked into the layer durations.
struct ModelJob {
  ModelProfile model;
  int epochs = 1;
  int minibatches_per_epoch = 1;
  int batch_size = 1;
  std::map<std::string, std::string> hyperparams;

  int total_minibatches() const { return epochs * minibatches_per_epoch; }
};

void validate(const ModelJob& job);

/// n_layers identical copies of per_layer. Throws InvalidArgument for an
/// empty chain.
ModelProfile make_uniform_model(int n_layers, const LayerProfile& per_layer,
                                double input_batch_bytes,
                                const std::string& name = "uniform");

struct TransformerParams {
  int n_blocks = 1;
  int d_model = 1;
  int seq_len = 1;
  int batch_size = 1;
  double bytes_per_param = 4;
  double device_reference_flops = 1;  // flops/s used to turn flops into seconds
  std::string name = "transformer";
};

/// GPT-style decoder stack: one layer per transformer block framed by an
/// embedding layer and a (weight-tied) language-model head. Block cost model:
///   params      = 12 * d^2 * bytes_per_param
///   fwd flops   = 24*b*s*d^2 + 4*b*s^2*d     (bwd = 2x fwd)
///   activation  = b*s*d * bytes_per_param
///   workspace   = b * (d/64) * s^2 * bytes_per_param   (attention scores)
/// The constants are a declared cost-model convention. Throws ByteOverflow
/// if any byte quantity leaves the exactly-representable range.
ModelProfile make_transformer_model(const TransformerParams& p);

/// Vocabulary size baked into the embedding/head layers (GPT-2 BPE).
inline constexpr int kTransformerVocab = 50257;

}  // namespace spillsim
