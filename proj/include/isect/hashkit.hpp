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

#pragma once

// Keyed hashing shared by every sketch.
//
// Hash function k of a family is
//
//   hash64(k, e) = mix64(XXH64(e, base_seed) ^ key_k)
//
// where key_k is the (k+1)-th output of a splitmix64 stream started at
// base_seed and mix64 is the Stafford "Mix13" 64-bit finalizer. XXH64 is
// xxHash 0.8 (byte-exact across platforms), so sketch files built from the
// same seed are portable. HyperLogLog sketches use the same construction
// with a separate domain key (hll_hash), so their buckets are independent
// of every max-sketch slot.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace isect {

/// Stafford Mix13 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// One step of the splitmix64 generator. Advances `state` and returns the output.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

/// XXH64 of the element bytes, seeded with `seed`.
std::uint64_t element_hash(std::uint64_t seed, std::string_view element) noexcept;

/// m hash functions derived from one seed.
class HashFamily {
 public:
  /// Throws ContractError when m == 0.
  HashFamily(std::uint64_t base_seed, std::size_t m);

  std::uint64_t base_seed() const noexcept { return base_seed_; }
  std::size_t size() const noexcept { return keys_->size(); }

  /// Per-slot keys, key_k for k in [0, m).
  std::span<const std::uint64_t> slot_keys() const noexcept { return *keys_; }

  /// Key of the single HyperLogLog hash of this family.
  std::uint64_t hll_key() const noexcept { return hll_key_; }

  friend bool operator==(const HashFamily& x, const HashFamily& y) noexcept {
    return x.base_seed_ == y.base_seed_ && x.size() == y.size();
  }

 private:
  std::uint64_t base_seed_;
  std::uint64_t hll_key_;
  std::shared_ptr<const std::vector<std::uint64_t>> keys_;
};

/// Hash function k applied to an element. Throws ContractError if k >= m.
std::uint64_t hash64(const HashFamily& family, std::size_t k, std::string_view element);

/// Fills out[k] = hash64(family, k, element) for every k. out.size() must equal m.
void hash_all(const HashFamily& family, std::string_view element, std::span<std::uint64_t> out);

/// The HyperLogLog hash of an element (one per element, independent of the slots).
std::uint64_t hll_hash(const HashFamily& family, std::string_view element) noexcept;

/// Maps h to (h + 0.5) * 2^-64, the midpoint of its cell in (0, 1).
///
/// Evaluated in binary64, so the result is non-decreasing in h and clamped
/// below 1 (1 - 2^-65 is not representable). Use unit_complement / log_unit
/// where precision near 1 matters.
double to_unit(std::uint64_t h) noexcept;

/// 1 - to_unit(h), i.e. (2^64 - h - 0.5) * 2^-64, computed from ~h with no cancellation.
double unit_complement(std::uint64_t h) noexcept;

/// ln(to_unit(h)) without cancellation near 1.
double log_unit(std::uint64_t h) noexcept;

}  // namespace isect
