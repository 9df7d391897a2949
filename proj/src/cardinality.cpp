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

#include "isect/cardinality.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "isect/errors.hpp"

namespace isect {

std::string_view to_string(CardinalityMethod method) noexcept {
  return method == CardinalityMethod::hll ? "hll" : "maxsketch";
}

namespace {

double compute_alpha(std::size_t m) {
  const double md = static_cast<double>(m);
  // (log2((2+u)/(1+u)))^m via logs; underflows to 0 smoothly in the tail.
  auto integrand = [md](double u) {
    const double base = std::log1p(1.0 / (1.0 + u)) / std::log(2.0);
    return std::exp(md * std::log(base));
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double integral = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(),
                                               1e-12);
  return 1.0 / (md * integral);
}

}  // namespace

double alpha_m(std::size_t m) {
  if (m < 4) throw UnsupportedSizeError("alpha_m needs m >= 4, got " + std::to_string(m));
  static std::mutex mu;
  static std::map<std::size_t, double> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, compute_alpha(m)).first;
  return it->second;
}

CardinalityEstimate hll_estimate(const HllSketch& sketch, HllOptions options) {
  const std::size_t m = sketch.m();
  double sum = 0.0;
  std::size_t zeros = 0;
  for (auto c : sketch.registers()) {
    sum += std::ldexp(1.0, -static_cast<int>(c));
    if (c == 0) ++zeros;
  }
  const double md = static_cast<double>(m);
  CardinalityEstimate est{alpha_m(m) * md * md / sum, CardinalityMethod::hll, m, false};
  if (options.small_range_correction && zeros > 0 && est.value <= 2.5 * md) {
    est.value = md * std::log(md / static_cast<double>(zeros));
    est.correction_applied = true;
  }
  return est;
}

CardinalityEstimate maxsketch_cardinality(const MaxSketch& sketch) {
  if (sketch.empty()) throw EmptySketchError("cardinality of an empty max-sketch is undefined");
  double sum = 0.0;
  for (auto h : sketch.maxima()) sum += unit_complement(h);
  return {static_cast<double>(sketch.m()) / sum, CardinalityMethod::maxsketch, sketch.m(), false};
}

}  // namespace isect
