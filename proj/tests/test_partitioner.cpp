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

#include "doctest.h"
#include "spillsim/errors.hpp"
#include "spillsim/partitioner.hpp"
#include "test_helpers.hpp"

using namespace spillsim;
using test::Draw;
using test::device_with_mem;
using test::model_from_footprints;
using test::prefix_sum_cuts;

namespace {

// Device sized so the effective capacity equals `capacity` exactly under a
// zero-byte absolute buffer policy.
Partitioning partition_at_capacity(const std::vector<double>& footprints,
                                   double capacity) {
  return partition(model_from_footprints(footprints),
                   device_with_mem(capacity), BufferPolicy::absolute(0));
}

}  // namespace

TEST_CASE("effective capacity arithmetic") {
  ModelProfile model = model_from_footprints({1});
  SUBCASE("fractional reservation") {
    model.input_batch_bytes = 0.5e9;
    const double cap = effective_capacity(device_with_mem(16e9), model,
                                          BufferPolicy::fraction(0.10));
    CHECK(cap == doctest::Approx(16e9 * 0.9 - 0.5e9));
  }
  SUBCASE("absolute reservation") {
    const double cap = effective_capacity(device_with_mem(16e9), model,
                                          BufferPolicy::absolute(2e9));
    CHECK(cap == doctest::Approx(14e9));
  }
  SUBCASE("batch larger than memory") {
    model.input_batch_bytes = 2e9;
    CHECK_THROWS_AS(effective_capacity(device_with_mem(1e9), model,
                                       BufferPolicy::absolute(0)),
                    CapacityExhausted);
  }
}

TEST_CASE("greedy cuts match the examples") {
  SUBCASE("four layers, capacity 16") {
    const auto p = partition_at_capacity({6, 6, 6, 6}, 16);
    CHECK(p.shard_starts == std::vector<int>{0, 2});
    CHECK(p.shard_starts == prefix_sum_cuts({6, 6, 6, 6}, 16));
    CHECK(p.shards[0].layer_begin == 0);
    CHECK(p.shards[0].layer_end == 2);
    CHECK(p.shards[1].layer_begin == 2);
    CHECK(p.shards[1].layer_end == 4);
  }
  SUBCASE("everything fits: single shard") {
    const auto p = partition_at_capacity({6, 6, 6, 6}, 100);
    CHECK(p.shard_starts == std::vector<int>{0});
    CHECK(p.shard_count() == 1);
  }
  SUBCASE("one layer exceeds capacity") {
    try {
      partition_at_capacity({10, 20}, 16);
      FAIL("expected SingleLayerTooLarge");
    } catch (const SingleLayerTooLarge& e) {
      CHECK(e.layer_index == 1);
      CHECK(e.footprint_bytes == doctest::Approx(20));
    }
  }
  SUBCASE("exact fit does not cut") {
    const auto p = partition_at_capacity({8, 8}, 16);
    CHECK(p.shard_count() == 1);
  }
}

TEST_CASE("partitioning properties on random instances") {
  Draw draw(42);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = draw.uniform_int(1, 40);
    std::vector<double> fps;
    double max_fp = 0;
    for (int i = 0; i < n; ++i) {
      fps.push_back(static_cast<double>(draw.uniform_int(1, 100)));
      max_fp = std::max(max_fp, fps.back());
    }
    const double cap = max_fp + draw.uniform_int(0, 300);
    const auto p = partition_at_capacity(fps, cap);

    CHECK(p.shard_starts == prefix_sum_cuts(fps, cap));

    // shards tile the layer sequence exactly
    int cursor = 0;
    double total_params = 0;
    for (const auto& s : p.shards) {
      CHECK(s.layer_begin == cursor);
      CHECK(s.layer_end > s.layer_begin);
      cursor = s.layer_end;
      CHECK(s.peak_exec_bytes <= cap + 1e-9);
      total_params += s.param_bytes;
    }
    CHECK(cursor == n);
    CHECK(total_params == doctest::Approx(0.0));  // footprints are workspace

    // capacity monotonicity
    const auto wider = partition_at_capacity(fps, cap + draw.uniform_int(1, 200));
    CHECK(wider.shard_count() <= p.shard_count());

    // full-fit gives one shard
    double sum = 0;
    for (double f : fps) sum += f;
    CHECK(partition_at_capacity(fps, sum).shard_count() == 1);
  }
}

TEST_CASE("auto buffer policy widens to the largest shard's params") {
  // Layers with chunky params: the 10% trial reserve (32) is smaller than a
  // shard's params, so the reserve widens and the model re-partitions.
  ModelProfile model;
  model.name = "heavy";
  for (int i = 0; i < 8; ++i) {
    model.layers.push_back(make_layer(/*param=*/40, /*act=*/0, /*ws=*/0,
                                      /*fwd=*/1));
  }
  // pilot per layer = 80; device 320: trial reserve 32, capacity 288 →
  // 3 shards of ~3 layers → largest params 120 > 32 → re-reserve at 120.
  const auto p = partition(model, device_with_mem(320), BufferPolicy{});
  CHECK(p.buffer_reserve_bytes >= 120);
  for (const auto& s : p.shards) {
    CHECK(s.param_bytes <= p.buffer_reserve_bytes + 1e-9);
    CHECK(s.peak_exec_bytes <= p.effective_capacity_bytes + 1e-9);
  }
}

TEST_CASE("partition stats") {
  SUBCASE("uniform split is balanced") {
    const auto p = partition_at_capacity({6, 6, 6, 6}, 16);
    const auto stats = partition_stats(p);
    CHECK(stats.shard_count == 2);
    CHECK(stats.imbalance == doctest::Approx(1.0));
  }
  SUBCASE("3s vs 1s shards") {
    // Capacity forces a cut after three layers: fwd sums 3 and 1.
    const auto p = partition_at_capacity({5, 5, 5, 5}, 16);
    const auto stats = partition_stats(p);
    REQUIRE(stats.shard_count == 2);
    CHECK(stats.imbalance == doctest::Approx(3.0 / 2.0));
  }
  SUBCASE("single shard") {
    const auto p = partition_at_capacity({5}, 100);
    CHECK(partition_stats(p).imbalance == doctest::Approx(1.0));
  }
}

TEST_CASE("boundary text round-trip and pinning") {
  const auto p = partition_at_capacity({6, 6, 6, 6}, 16);
  const auto text = boundaries_to_text(p);
  CHECK(boundaries_from_text(text) == p.shard_starts);

  const auto pinned = partition_with_boundaries(
      model_from_footprints({6, 6, 6, 6}), p.shard_starts,
      device_with_mem(16), BufferPolicy::absolute(0));
  CHECK(pinned.shard_starts == p.shard_starts);
  CHECK(pinned.shards.size() == p.shards.size());

  CHECK_THROWS_AS(partition_with_boundaries(model_from_footprints({6, 6}),
                                            std::vector<int>{1},
                                            device_with_mem(16),
                                            BufferPolicy::absolute(0)),
                  InvalidArgument);
  CHECK_THROWS_AS(boundaries_from_text("0\nbad\n"), std::exception);
}
