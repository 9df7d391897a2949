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

// Intersection-size estimators for two max-sketches.
//
// Three classical schemes combine cardinality estimates with the Jaccard
// estimate; the maximum-likelihood scheme maximizes the joint density of the
// slot maxima over theta = (a, b, n) = (|A|, |B|, |A ∩ B|). Per slot, with
// s, t the unit maxima of A and B, u = a + b - n, alpha = a - n, beta = b - n:
//
//   s == t :  n * s^(u-1)
//   s <  t :  a * s^(a-1) * beta * t^(beta-1)
//   s >  t :  alpha * s^(alpha-1) * b * t^(b-1)
//
// so the log-likelihood of m independent slots only depends on IndicatorStats.

#include <cstddef>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "isect/sketch.hpp"

namespace isect {

/// theta = (a, b, n) with the derived quantities u, alpha, beta.
class ProblemParams {
 public:
  /// Throws DomainError unless a, b > 0 and 0 <= n <= min(a, b) (all finite).
  ProblemParams(double a, double b, double n);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double n() const noexcept { return n_; }
  double u() const noexcept { return a_ + b_ - n_; }
  double alpha() const noexcept { return a_ - n_; }
  double beta() const noexcept { return b_ - n_; }

  Eigen::Vector3d vector() const { return {a_, b_, n_}; }

 private:
  double a_;
  double b_;
  double n_;
};

/// K1 / m.
double jaccard_estimate(const IndicatorStats& stats);
/// Throws IncompatibleSketchError / EmptySketchError.
double jaccard_estimate(const MaxSketch& sa, const MaxSketch& sb);

/// Inclusion-exclusion a + b - u. Not clamped; noise can make it negative.
double scheme1(double a_hat, double b_hat, double u_hat);
/// rho * u.
double scheme2(double rho_hat, double u_hat);
/// rho / (rho + 1) * (a + b).
double scheme3(double rho_hat, double a_hat, double b_hat);

/// Log-likelihood of theta. Throws DomainError when theta is not strictly
/// feasible for the observed classes (n > 0 if K1 > 0, beta > 0 if K2 > 0,
/// alpha > 0 if K3 > 0).
double log_likelihood(const ProblemParams& theta, const IndicatorStats& stats);

/// log_likelihood(to) - log_likelihood(from), summed term by term so that
/// nearby points do not lose precision to cancellation.
double log_likelihood_delta(const ProblemParams& from, const ProblemParams& to, const IndicatorStats& stats);

/// Partial derivatives with respect to (a, b, n).
Eigen::Vector3d gradient(const ProblemParams& theta, const IndicatorStats& stats);

/// Second derivatives with respect to (a, b, n); symmetric.
Eigen::Matrix3d hessian(const ProblemParams& theta, const IndicatorStats& stats);

enum class MlFallback { all_equal, no_equal, singular_hessian };
std::string_view to_string(MlFallback fallback) noexcept;

enum class MlInitializer { maxsketch, hll };
std::string_view to_string(MlInitializer init) noexcept;

struct MlConfig {
  int max_iterations = 3;
  double rel_tolerance = 1e-9;
  double clamp_floor_fraction = 1e-6;
  MlInitializer initializer = MlInitializer::maxsketch;

  /// Throws ContractError: max_iterations in [1, 10], tolerances positive.
  void validate() const;
};

/// Cardinality estimates used to seed Newton-Raphson.
struct Cardinalities {
  double a = 0.0;
  double b = 0.0;
  double u = 0.0;
};

struct Theta {
  double a = 0.0;
  double b = 0.0;
  double n = 0.0;
};

struct MlReport {
  double n_hat = 0.0;
  double a_hat = 0.0;
  double b_hat = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Log-likelihood at the returned point (NaN for the no_equal/all_equal fallbacks).
  double log_likelihood = 0.0;
  std::optional<MlFallback> fallback;
  Theta initial;
  /// max_i |theta_i' - theta_i| / |theta_i| of the last accepted step.
  double last_rel_change = 0.0;
};

/// Newton-Raphson on the log-likelihood from theta_0 = (a, b, rho * u).
///
/// Boundary cases return a fallback without iterating: K1 = 0 gives n = 0
/// (no_equal); K2 = K3 = 0 gives n = a = b = init.a (all_equal). After every
/// step n, alpha, beta are clamped to >= floor_fraction * u_0 and
/// n <= min(a, b) * (1 - 1e-9); a step that lowers the likelihood is halved up
/// to 8 times. A singular Hessian returns the initial point (singular_hessian).
MlReport ml_from_stats(const IndicatorStats& stats, const Cardinalities& init, const MlConfig& config = {});

/// Full pipeline with max-sketch cardinalities as the initializer.
MlReport ml_estimate(const MaxSketch& sa, const MaxSketch& sb, const MlConfig& config = {});

/// Same, but a_0, b_0, u_0 come from HyperLogLog sketches of the same sets when
/// config.initializer is hll. Throws ContractError if hll is requested without them.
MlReport ml_estimate(const MaxSketch& sa, const MaxSketch& sb, const MlConfig& config,
                     const HllSketch* hll_a, const HllSketch* hll_b);

}  // namespace isect
