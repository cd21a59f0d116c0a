/*
 * Copyright 2026 The gprlab Authors
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

#include <cstdint>
#include <random>

namespace gprlab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-epoch streams.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/**
 * Fixed offsets that split one user seed into independent streams.
 * Everything random in a run is a pure function of (seed, stream, run).
 */
enum class SeedStream : std::uint64_t {
    dataset = 0,
    split = 1000,
    init = 2000,
    dropout = 3000,
};

constexpr std::uint64_t stream_seed(std::uint64_t seed, SeedStream s, std::uint64_t run = 0) noexcept {
    return seed + static_cast<std::uint64_t>(s) + run;
}

} // namespace gprlab
