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
#include <string_view>

#include "isect/sketch.hpp"

namespace isect {

enum class CardinalityMethod { hll, maxsketch };

std::string_view to_string(CardinalityMethod method) noexcept;

struct CardinalityEstimate {
  double value = 0.0;
  CardinalityMethod method = CardinalityMethod::hll;
  std::size_t m = 0;
  bool correction_applied = false;
};

/// HyperLogLog bias constant
///
///   alpha_m = ( m * integral_0^inf (log2((2 + u) / (1 + u)))^m du )^-1
///
/// by double-exponential quadrature (relative error well below 1e-6), cached
/// per m. Throws UnsupportedSizeError for m < 4.
double alpha_m(std::size_t m);

struct HllOptions {
  /// Linear counting m*ln(m/V) when the raw estimate is <= 2.5m and V > 0
  /// registers are zero. Off gives the bare harmonic-mean estimator.
  bool small_range_correction = true;
};

/// Raw estimate alpha_m * m^2 / sum_j 2^-C_j, optionally range corrected.
CardinalityEstimate hll_estimate(const HllSketch& sketch, HllOptions options = {});

/// m / sum_k (1 - x_k) over the unit maxima x_k. Throws EmptySketchError.
CardinalityEstimate maxsketch_cardinality(const MaxSketch& sketch);

}  // namespace isect
