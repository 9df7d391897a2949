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

#include "isect/sketch.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "isect/errors.hpp"

namespace isect {

void require_compatible(const HashFamily& x, const HashFamily& y) {
  if (x == y) return;
  throw IncompatibleSketchError("incompatible sketches: (seed " + std::to_string(x.base_seed()) +
                                ", m " + std::to_string(x.size()) + ") vs (seed " +
                                std::to_string(y.base_seed()) + ", m " + std::to_string(y.size()) +
                                ")");
}

MaxSketch::MaxSketch(HashFamily family) : family_(std::move(family)), maxima_(family_.size(), 0) {}

MaxSketch MaxSketch::from_maxima(HashFamily family, std::vector<std::uint64_t> maxima,
                                 std::uint64_t count_observed) {
  if (maxima.size() != family.size()) {
    throw FormatError("max-sketch has " + std::to_string(maxima.size()) + " maxima, expected m = " +
                      std::to_string(family.size()));
  }
  MaxSketch sketch(std::move(family));
  sketch.maxima_ = std::move(maxima);
  sketch.empty_ = false;
  sketch.count_observed_ = count_observed;
  return sketch;
}

void MaxSketch::update(std::string_view element) {
  const std::uint64_t h = element_hash(family_.base_seed(), element);
  const std::uint64_t* keys = family_.slot_keys().data();
  std::uint64_t* maxima = maxima_.data();
  const std::size_t m = maxima_.size();
  // Maxima start at 0; emptiness lives in the flag.
  for (std::size_t k = 0; k < m; ++k) {
    const std::uint64_t v = mix64(h ^ keys[k]);
    maxima[k] = v > maxima[k] ? v : maxima[k];
  }
  empty_ = false;
  ++count_observed_;
}

MaxSketch max_merge(const MaxSketch& s1, const MaxSketch& s2) {
  require_compatible(s1.family(), s2.family());
  MaxSketch out = s1;
  out.count_observed_ = s1.count_observed_ + s2.count_observed_;
  if (s2.empty()) return out;
  if (s1.empty()) {
    out.maxima_ = s2.maxima_;
  } else {
    for (std::size_t k = 0; k < out.maxima_.size(); ++k) {
      out.maxima_[k] = std::max(out.maxima_[k], s2.maxima_[k]);
    }
  }
  out.empty_ = false;
  return out;
}

HllPosition hll_position(std::uint64_t hash, unsigned precision) noexcept {
  const std::uint64_t bucket_mask = (std::uint64_t{1} << precision) - 1;
  const std::uint64_t pattern = hash >> precision;
  const unsigned width = 64 - precision;
  const unsigned rank = pattern == 0 ? width + 1 : std::countl_zero(pattern) - precision + 1;
  return {static_cast<std::size_t>(hash & bucket_mask), static_cast<std::uint8_t>(rank)};
}

HllSketch::HllSketch(HashFamily family) : family_(std::move(family)) {
  const std::size_t m = family_.size();
  if (!std::has_single_bit(m) || m > (std::size_t{1} << 32)) {
    throw UnsupportedSizeError("HyperLogLog needs m to be a power of two, got " +
                               std::to_string(m));
  }
  precision_ = static_cast<unsigned>(std::countr_zero(m));
  registers_.assign(m, 0);
}

HllSketch HllSketch::from_registers(HashFamily family, std::vector<std::uint8_t> registers,
                                    std::uint64_t count_observed) {
  HllSketch sketch(std::move(family));
  if (registers.size() != sketch.m()) {
    throw FormatError("HyperLogLog sketch has " + std::to_string(registers.size()) +
                      " registers, expected m = " + std::to_string(sketch.m()));
  }
  const unsigned max_rank = 64 - sketch.precision_ + 1;
  for (auto r : registers) {
    if (r > max_rank) throw FormatError("HyperLogLog register " + std::to_string(r) + " out of range");
  }
  sketch.registers_ = std::move(registers);
  sketch.count_observed_ = count_observed;
  return sketch;
}

void HllSketch::update(std::string_view element) { update_hash(hll_hash(family_, element)); }

void HllSketch::update_hash(std::uint64_t hash) noexcept {
  const auto pos = hll_position(hash, precision_);
  auto& reg = registers_[pos.bucket];
  reg = std::max(reg, pos.rank);
  ++count_observed_;
}

bool HllSketch::empty() const noexcept {
  return std::all_of(registers_.begin(), registers_.end(), [](std::uint8_t r) { return r == 0; });
}

HllSketch hll_merge(const HllSketch& s1, const HllSketch& s2) {
  require_compatible(s1.family(), s2.family());
  HllSketch out = s1;
  out.count_observed_ = s1.count_observed_ + s2.count_observed_;
  for (std::size_t j = 0; j < out.registers_.size(); ++j) {
    out.registers_[j] = std::max(out.registers_[j], s2.registers_[j]);
  }
  return out;
}

IndicatorStats indicator_stats(const MaxSketch& sa, const MaxSketch& sb) {
  require_compatible(sa.family(), sb.family());
  if (sa.empty() || sb.empty()) throw EmptySketchError("indicator statistics need two non-empty sketches");
  IndicatorStats st;
  st.m = sa.m();
  const auto xa = sa.maxima();
  const auto xb = sb.maxima();
  for (std::size_t k = 0; k < st.m; ++k) {
    if (xa[k] == xb[k]) {
      ++st.k1;
      st.s1s += log_unit(xa[k]);
    } else if (xa[k] < xb[k]) {
      ++st.k2;
      st.s2s += log_unit(xa[k]);
      st.s2t += log_unit(xb[k]);
    } else {
      ++st.k3;
      st.s3s += log_unit(xa[k]);
      st.s3t += log_unit(xb[k]);
    }
  }
  return st;
}

}  // namespace isect
