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

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

// Seeded stream derivation. Every stochastic consumer (instance, branch,
// trajectory, shot set) owns an engine seeded from the master seed and its
// own coordinates, so results do not depend on scheduling or worker count.

namespace rydotoc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ull));
    }
    return s;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
}

/// Standard normal draw that does not depend on std::normal_distribution's
/// internal caching, so two calls on fresh engines always agree.
inline double standard_normal(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double u1 = u(rng);
    while (u1 <= 0.0) u1 = u(rng);
    const double u2 = u(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace rydotoc
