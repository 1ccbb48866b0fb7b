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

#include <stdexcept>
#include <string>

namespace spillsim {

/// Base class for all spillsim errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input: bad config file, bad argument, broken invariant.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

/// Workload/config file failed to parse or validate.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Byte arithmetic left the exactly-representable integer range.
class ByteOverflow : public Error {
 public:
  explicit ByteOverflow(const std::string& msg) : Error(msg) {}
};

/// A memory-capacity precondition failed. Carries enough detail to print
/// the deficit the way feasibility reports do.
class InfeasibleOOM : public Error {
 public:
  InfeasibleOOM(std::string strategy, std::string job, std::string device,
                double required_bytes, double available_bytes);
  const std::string strategy;
  const std::string job;
  const std::string device;
  const double required_bytes;
  const double available_bytes;
  double deficit_bytes() const { return required_bytes - available_bytes; }
};

/// Device cannot hold even the reserved buffer plus the input batch.
class CapacityExhausted : public Error {
 public:
  CapacityExhausted(std::string device, double required_bytes,
                    double available_bytes);
  const std::string device;
  const double required_bytes;
  const double available_bytes;
};

/// One layer's pilot footprint exceeds the effective device capacity, so the
/// model cannot be sharded at layer granularity.
class SingleLayerTooLarge : public Error {
 public:
  SingleLayerTooLarge(int layer_index, double footprint_bytes,
                      double capacity_bytes);
  const int layer_index;
  const double footprint_bytes;
  const double capacity_bytes;
};

/// Aggregate host-resident model state exceeds host DRAM.
class HostOOM : public Error {
 public:
  HostOOM(double required_bytes, double available_bytes);
  const double required_bytes;
  const double available_bytes;
};

/// A prefetched shard's parameters do not fit the reserved buffer.
class BufferOverflow : public Error {
 public:
  BufferOverflow(std::string device, double param_bytes, double buffer_bytes);
  const std::string device;
  const double param_bytes;
  const double buffer_bytes;
};

/// The event loop ran dry while tasks remained incomplete; a scheduler bug,
/// surfaced instead of a silent hang.
class DeadlockError : public Error {
 public:
  DeadlockError(int completed, int total);
  const int completed;
  const int total;
};

/// Exact search was asked for an instance beyond its enforced limits.
class InstanceTooLarge : public Error {
 public:
  InstanceTooLarge(int tasks, int devices);
  const int tasks;
  const int devices;
};

}  // namespace spillsim
