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

#include "rydotoc/pulse_json.hpp"

namespace rydotoc {

using nlohmann::json;

void to_json(json& j, const Position& p) { j = json::array({p.x, p.y}); }

void from_json(const json& j, Position& p) {
    if (!j.is_array() || j.empty() || j.size() > 2) {
        throw std::invalid_argument("position must be [x] or [x, y]");
    }
    p.x = j.at(0).get<double>();
    p.y = j.size() == 2 ? j.at(1).get<double>() : 0.0;
}

void to_json(json& j, const AtomGeometry& g) {
    j = json{{"positions_um", g.positions()}, {"lattice_spacing_um", g.lattice_spacing()}};
}

void from_json(const json& j, AtomGeometry& g) {
    if (j.contains("chain")) {
        const auto& c = j.at("chain");
        g = AtomGeometry::chain(c.at("n_atoms").get<int>(), c.at("spacing_um").get<double>());
        return;
    }
    g = AtomGeometry(j.at("positions_um").get<std::vector<Position>>(),
                     j.value("lattice_spacing_um", 0.0));
}

void to_json(json& j, const Waveform& w) {
    j = json::array();
    for (const auto& b : w.breakpoints()) j.push_back(json::array({b.time, b.value}));
}

void from_json(const json& j, Waveform& w) {
    std::vector<Breakpoint> pts;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("breakpoint must be [t, value]");
        pts.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
    }
    w = Waveform(std::move(pts));
}

void to_json(json& j, const ChannelLimits& c) {
    j = json{{"min", c.min}, {"max", c.max}, {"slew", c.slew}};
}

void from_json(const json& j, ChannelLimits& c) {
    c.min = j.at("min").get<double>();
    c.max = j.at("max").get<double>();
    c.slew = j.at("slew").get<double>();
}

void to_json(json& j, const HardwareProfile& p) {
    j = json{{"omega", p.omega},
             {"delta", p.delta},
             {"local_delta", p.local_delta},
             {"max_duration_us", p.max_duration},
             {"min_atom_spacing_um", p.min_atom_spacing},
             {"c6_rad_um6_per_us", p.c6},
             {"rabi_half_convention", p.rabi_half_convention}};
}

void from_json(const json& j, HardwareProfile& p) {
    HardwareProfile d;
    p.omega = j.contains("omega") ? j.at("omega").get<ChannelLimits>() : d.omega;
    p.delta = j.contains("delta") ? j.at("delta").get<ChannelLimits>() : d.delta;
    p.local_delta = j.contains("local_delta") ? j.at("local_delta").get<ChannelLimits>() : d.local_delta;
    p.max_duration = j.value("max_duration_us", d.max_duration);
    p.min_atom_spacing = j.value("min_atom_spacing_um", d.min_atom_spacing);
    p.c6 = j.value("c6_rad_um6_per_us", d.c6);
    if (j.contains("c6_2pi_MHz_um6")) p.c6 = from_mhz(j.at("c6_2pi_MHz_um6").get<double>());
    p.rabi_half_convention = j.value("rabi_half_convention", d.rabi_half_convention);
    p.check();
}

void to_json(json& j, const PulseSchedule& s) {
    j = json{{"total_time_us", s.total_time}, {"omega", s.omega}, {"delta", s.delta}};
    if (s.local) {
        j["local_delta"] = json{{"mask", s.local->mask}, {"waveform", s.local->waveform}};
    }
}

void from_json(const json& j, PulseSchedule& s) {
    s.total_time = j.at("total_time_us").get<double>();
    s.omega = j.contains("omega") ? j.at("omega").get<Waveform>() : Waveform{};
    s.delta = j.contains("delta") ? j.at("delta").get<Waveform>() : Waveform{};
    s.local.reset();
    if (j.contains("local_delta") && !j.at("local_delta").is_null()) {
        const auto& l = j.at("local_delta");
        s.local = LocalDetuning{l.at("mask").get<std::vector<bool>>(),
                                l.at("waveform").get<Waveform>()};
    }
}

}  // namespace rydotoc
