// Copyright 2026 The pmqs Authors
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

// Seeded random streams.
//
// A master seed is split into independent named streams with SplitMix64:
// stream k is an mt19937_64 seeded with SplitMix64(master ^ tag_k) where
// tag_k is a fixed 64-bit constant per stream. Results are reproducible per
// binary; the standard library distributions used on top are not guaranteed
// to be identical across toolchains.

#ifndef PMQS_RANDOM_HPP_
#define PMQS_RANDOM_HPP_

#include <cstdint>
#include <random>

#include "pmqs/core.hpp"

namespace pmqs {

inline std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  kSamples = 0x73616d706c657331ULL,    // "samples1"
  kInstance = 0x696e7374616e6365ULL,   // "instance"
  kOutput = 0x6f75747075747331ULL,     // "outputs1"
};

inline std::mt19937_64 MakeStream(std::uint64_t master_seed, Stream stream) {
  std::uint64_t state = master_seed ^ static_cast<std::uint64_t>(stream);
  const std::uint64_t a = SplitMix64(state);
  const std::uint64_t b = SplitMix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

inline Vector UniformVector(std::mt19937_64& rng, Index n, double lo,
                            double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Vector UniformInBox(std::mt19937_64& rng, const BoxDomain& domain) {
  return UniformVector(rng, domain.dimension(), -domain.radius(),
                       domain.radius());
}

inline Index UniformIndex(std::mt19937_64& rng, Index n) {
  return std::uniform_int_distribution<Index>(0, n - 1)(rng);
}

}  // namespace pmqs

#endif  // PMQS_RANDOM_HPP_
