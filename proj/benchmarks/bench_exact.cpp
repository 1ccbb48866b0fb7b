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

#include "spillsim/exact.hpp"

namespace {

void BM_exact_optimal(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  spillsim::TaskInstance instance;
  instance.devices = 3;
  // alternating chain lengths 2/1 with a spread of durations
  int pred = -1;
  for (int i = 0; i < n; ++i) {
    instance.tasks.push_back(spillsim::TaskInstance::Task{
        "t" + std::to_string(i), 0.5 + 0.25 * (i % 5), i % 3 == 1 ? pred : -1});
    pred = i;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spillsim::exact_optimal(instance));
  }
}

}  // namespace

BENCHMARK(BM_exact_optimal)->Arg(6)->Arg(8)->Arg(10);
