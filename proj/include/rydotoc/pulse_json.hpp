// Copyright 2026 The rydotoc Authors
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

#pragma once

#include "json.hpp"
#include "rydotoc/pulse.hpp"

// JSON encoding of geometry, profile and schedules. Values are stored in the
// internal units (us, um, rad/us) so that parse -> serialize is lossless.
//
//   geometry: {"positions_um": [[x, y], ...], "lattice_spacing_um": a}
//   waveform: [[t_us, value_rad_per_us], ...]
//   profile:  {"omega": {"min", "max", "slew"}, "delta": {...}, "local_delta": {...},
//              "max_duration_us", "min_atom_spacing_um", "c6_rad_um6_per_us",
//              "rabi_half_convention"}
//   schedule: {"total_time_us", "omega", "delta",
//              "local_delta": {"mask": [bool...], "waveform": [...]}}

namespace rydotoc {

void to_json(nlohmann::json& j, const Position& p);
void from_json(const nlohmann::json& j, Position& p);
void to_json(nlohmann::json& j, const AtomGeometry& g);
void from_json(const nlohmann::json& j, AtomGeometry& g);
void to_json(nlohmann::json& j, const Waveform& w);
void from_json(const nlohmann::json& j, Waveform& w);
void to_json(nlohmann::json& j, const ChannelLimits& c);
void from_json(const nlohmann::json& j, ChannelLimits& c);
void to_json(nlohmann::json& j, const HardwareProfile& p);
void from_json(const nlohmann::json& j, HardwareProfile& p);
void to_json(nlohmann::json& j, const PulseSchedule& s);
void from_json(const nlohmann::json& j, PulseSchedule& s);

}  // namespace rydotoc
