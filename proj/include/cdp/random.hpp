// Copyright 2026 The cdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace cdp {

// Seeded streams whose output is identical on every conforming platform.
// std::mt19937_64 is bit-specified by the standard; the distributions in
// <random> are not, so bounded draws go through uniform_below() below.

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn string identifiers into stream ids.
constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

// Independent generator for (seed, stream...). Mixing each component through
// SplitMix64 keeps adjacent stream ids uncorrelated.
template <typename... Ids>
Rng make_stream(std::uint64_t seed, Ids... ids) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  ((state ^= static_cast<std::uint64_t>(ids), mixed ^= splitmix64(state)), ...);
  std::uint64_t s2 = mixed;
  std::seed_seq seq{static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32),
                    static_cast<std::uint32_t>(splitmix64(s2)),
                    static_cast<std::uint32_t>(splitmix64(s2))};
  return Rng(seq);
}

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform_unit(rng) < p; }

// Partial Fisher-Yates: the first `count` entries of `pool` become a uniform
// sample without replacement, in draw order.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t count, Rng& rng) {
  if (count > pool.size()) count = pool.size();
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace cdp
