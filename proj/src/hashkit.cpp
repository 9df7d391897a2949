/*
 * Copyright 2026 The isect Authors
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

#include "isect/hashkit.hpp"

#include <cmath>
#include <string>

#include "isect/errors.hpp"

#define XXH_INLINE_ALL
#include "xxhash.h"

namespace isect {

namespace {

// Separates the HyperLogLog key from the slot key stream.
constexpr std::uint64_t kHllDomain = 0x68796c6c2d6b6579ULL;  // "hyll-key"

}  // namespace

std::uint64_t element_hash(std::uint64_t seed, std::string_view element) noexcept {
  return XXH64(element.data(), element.size(), seed);
}

HashFamily::HashFamily(std::uint64_t base_seed, std::size_t m)
    : base_seed_(base_seed), hll_key_(mix64(base_seed ^ kHllDomain)) {
  if (m == 0) throw ContractError("hash family needs at least one hash function");
  std::vector<std::uint64_t> keys(m);
  std::uint64_t state = base_seed;
  for (auto& key : keys) key = splitmix64_next(state);
  keys_ = std::make_shared<const std::vector<std::uint64_t>>(std::move(keys));
}

std::uint64_t hash64(const HashFamily& family, std::size_t k, std::string_view element) {
  if (k >= family.size()) {
    throw ContractError("hash index " + std::to_string(k) + " out of range for m = " +
                        std::to_string(family.size()));
  }
  return mix64(element_hash(family.base_seed(), element) ^ family.slot_keys()[k]);
}

void hash_all(const HashFamily& family, std::string_view element, std::span<std::uint64_t> out) {
  if (out.size() != family.size()) throw ContractError("hash_all: output size differs from m");
  const std::uint64_t h = element_hash(family.base_seed(), element);
  const auto keys = family.slot_keys();
  for (std::size_t k = 0; k < keys.size(); ++k) out[k] = mix64(h ^ keys[k]);
}

std::uint64_t hll_hash(const HashFamily& family, std::string_view element) noexcept {
  return mix64(element_hash(family.base_seed(), element) ^ family.hll_key());
}

double to_unit(std::uint64_t h) noexcept {
  static const double kBelowOne = std::nextafter(1.0, 0.0);
  const double x = (static_cast<double>(h) + 0.5) * 0x1p-64;
  return x < kBelowOne ? x : kBelowOne;
}

double unit_complement(std::uint64_t h) noexcept {
  return (static_cast<double>(~h) + 0.5) * 0x1p-64;
}

double log_unit(std::uint64_t h) noexcept {
  if (h >> 63) return std::log1p(-unit_complement(h));
  return std::log(to_unit(h));
}

}  // namespace isect
