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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "isect/hashkit.hpp"

namespace isect {

/// Per-slot maxima of m keyed hashes over the distinct elements of a set.
///
/// Maxima are kept as raw 64-bit words so that slot equality between two
/// sketches is decided exactly; unit-interval values come from to_unit().
/// A sketch that has seen no element is flagged empty and refuses estimation.
class MaxSketch {
 public:
  explicit MaxSketch(HashFamily family);

  /// Rebuilds a non-empty sketch from stored maxima (deserialization, simulation).
  static MaxSketch from_maxima(HashFamily family, std::vector<std::uint64_t> maxima,
                               std::uint64_t count_observed);

  void update(std::string_view element);

  const HashFamily& family() const noexcept { return family_; }
  std::size_t m() const noexcept { return maxima_.size(); }
  bool empty() const noexcept { return empty_; }
  std::uint64_t count_observed() const noexcept { return count_observed_; }
  std::span<const std::uint64_t> maxima() const noexcept { return maxima_; }
  double unit_value(std::size_t k) const { return to_unit(maxima_.at(k)); }

  /// Content equality: family, empty flag and maxima. count_observed is informational.
  friend bool operator==(const MaxSketch& x, const MaxSketch& y) noexcept {
    return x.family_ == y.family_ && x.empty_ == y.empty_ && x.maxima_ == y.maxima_;
  }

 private:
  friend MaxSketch max_merge(const MaxSketch&, const MaxSketch&);

  HashFamily family_;
  std::vector<std::uint64_t> maxima_;
  bool empty_ = true;
  std::uint64_t count_observed_ = 0;
};

/// Component-wise max: the sketch of the union. Throws IncompatibleSketchError.
MaxSketch max_merge(const MaxSketch& s1, const MaxSketch& s2);

/// Bucket and leading-zero rank of one HyperLogLog hash.
struct HllPosition {
  std::size_t bucket;
  std::uint8_t rank;
};

/// Low `precision` bits pick the bucket; rank = leading zeros of the remaining
/// 64 - precision bits, plus one (64 - precision + 1 when they are all zero).
HllPosition hll_position(std::uint64_t hash, unsigned precision) noexcept;

/// HyperLogLog registers, m a power of two.
class HllSketch {
 public:
  /// Throws UnsupportedSizeError unless family.size() is a power of two.
  explicit HllSketch(HashFamily family);

  static HllSketch from_registers(HashFamily family, std::vector<std::uint8_t> registers,
                                  std::uint64_t count_observed);

  void update(std::string_view element);
  /// Ingests an already computed HyperLogLog hash.
  void update_hash(std::uint64_t hash) noexcept;

  const HashFamily& family() const noexcept { return family_; }
  std::size_t m() const noexcept { return registers_.size(); }
  unsigned precision() const noexcept { return precision_; }
  std::uint64_t count_observed() const noexcept { return count_observed_; }
  std::span<const std::uint8_t> registers() const noexcept { return registers_; }
  /// True while every register is zero (no element ingested).
  bool empty() const noexcept;

  friend bool operator==(const HllSketch& x, const HllSketch& y) noexcept {
    return x.family_ == y.family_ && x.registers_ == y.registers_;
  }

 private:
  friend HllSketch hll_merge(const HllSketch&, const HllSketch&);

  HashFamily family_;
  unsigned precision_;
  std::vector<std::uint8_t> registers_;
  std::uint64_t count_observed_ = 0;
};

/// Register-wise max. Throws IncompatibleSketchError.
HllSketch hll_merge(const HllSketch& s1, const HllSketch& s2);

/// Sufficient statistics of a sketch pair for the likelihood.
///
/// With s_k, t_k the unit maxima of sketch A and B in slot k:
///   k1 slots with s_k == t_k, k2 with s_k < t_k, k3 with s_k > t_k;
///   s1s = sum ln s_k over k1 slots; s2s, s2t = sums of ln s_k, ln t_k over k2
///   slots; s3s, s3t likewise over k3 slots.
struct IndicatorStats {
  std::size_t m = 0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::size_t k3 = 0;
  double s1s = 0.0;
  double s2s = 0.0;
  double s2t = 0.0;
  double s3s = 0.0;
  double s3t = 0.0;

  friend bool operator==(const IndicatorStats&, const IndicatorStats&) = default;
};

/// Throws IncompatibleSketchError or EmptySketchError.
IndicatorStats indicator_stats(const MaxSketch& sa, const MaxSketch& sb);

/// Throws IncompatibleSketchError naming both seeds and sizes when families differ.
void require_compatible(const HashFamily& x, const HashFamily& y);

}  // namespace isect
