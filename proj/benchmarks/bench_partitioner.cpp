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

#include <benchmark/benchmark.h>

#include "spillsim/partitioner.hpp"

namespace {

void BM_partition(benchmark::State& state) {
  const int layers = static_cast<int>(state.range(0));
  auto layer = spillsim::make_layer(1e8, 1e7, 2e7, 0.01);
  const auto model = spillsim::make_uniform_model(layers, layer, 1e6);
  spillsim::DeviceSpec device;
  device.device_id = "gpu0";
  device.mem_bytes = 16e9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spillsim::partition(model, device));
  }
  state.SetItemsProcessed(state.iterations() * layers);
}

}  // namespace

BENCHMARK(BM_partition)->Arg(100)->Arg(1000)->Arg(10000);
