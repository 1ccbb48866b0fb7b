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

#include <string>

#include "spillsim/sim.hpp"

namespace spillsim {

/// Chrome trace-event JSON: complete ("ph":"X") events with microsecond
/// timestamps, pid = device (host/shared channels under a synthetic "host"
/// process), tid = lane within the process. Loadable in standard trace
/// viewers. Deterministic: byte-identical for identical traces.
std::string to_chrome_trace_json(const SimTrace& trace);

}  // namespace spillsim
