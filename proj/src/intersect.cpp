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

#include "isect/intersect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "isect/cardinality.hpp"
#include "isect/errors.hpp"

namespace isect {

ProblemParams::ProblemParams(double a, double b, double n) : a_(a), b_(b), n_(n) {
  if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(n))) {
    throw DomainError("problem parameters must be finite");
  }
  if (!(a > 0.0 && b > 0.0)) throw DomainError("cardinalities a and b must be positive");
  if (!(n >= 0.0 && n <= std::min(a, b))) {
    throw DomainError("intersection n = " + std::to_string(n) + " outside [0, min(a, b)]");
  }
}

double jaccard_estimate(const IndicatorStats& stats) {
  if (stats.m == 0) throw ContractError("jaccard_estimate: empty statistics");
  return static_cast<double>(stats.k1) / static_cast<double>(stats.m);
}

double jaccard_estimate(const MaxSketch& sa, const MaxSketch& sb) {
  return jaccard_estimate(indicator_stats(sa, sb));
}

double scheme1(double a_hat, double b_hat, double u_hat) { return a_hat + b_hat - u_hat; }

double scheme2(double rho_hat, double u_hat) { return rho_hat * u_hat; }

double scheme3(double rho_hat, double a_hat, double b_hat) {
  if (rho_hat == 0.0) return 0.0;
  return rho_hat / (rho_hat + 1.0) * (a_hat + b_hat);
}

namespace {

// count / x, with 0 when the class is empty (x may then be 0 as well).
double ratio(std::size_t count, double x) { return count == 0 ? 0.0 : static_cast<double>(count) / x; }

double ratio2(std::size_t count, double x) { return count == 0 ? 0.0 : static_cast<double>(count) / (x * x); }

void require_feasible(const ProblemParams& t, const IndicatorStats& s) {
  if (s.k1 > 0 && !(t.n() > 0.0)) throw DomainError("log-likelihood needs n > 0 when slots match");
  if (s.k2 > 0 && !(t.beta() > 0.0)) throw DomainError("log-likelihood needs b - n > 0 when some s < t");
  if (s.k3 > 0 && !(t.alpha() > 0.0)) throw DomainError("log-likelihood needs a - n > 0 when some s > t");
}

// ln(y / x) for positive x, y, accurate when y is close to x.
double log_ratio(double y, double x) { return std::log1p((y - x) / x); }

double max_rel_change(const ProblemParams& from, const ProblemParams& to) {
  return std::max({std::abs(to.a() - from.a()) / std::abs(from.a()),
                   std::abs(to.b() - from.b()) / std::abs(from.b()),
                   std::abs(to.n() - from.n()) / std::abs(from.n())});
}

constexpr double kUpperShrink = 1.0 - 1e-9;
constexpr int kMaxHalvings = 8;
constexpr double kConvergedChange = 1e-6;

}  // namespace

double log_likelihood(const ProblemParams& t, const IndicatorStats& s) {
  require_feasible(t, s);
  double ll = 0.0;
  if (s.k1 > 0) ll += s.k1 * std::log(t.n()) + (t.u() - 1.0) * s.s1s;
  if (s.k2 > 0) {
    ll += s.k2 * (std::log(t.beta()) + std::log(t.a())) + (t.beta() - 1.0) * s.s2t + (t.a() - 1.0) * s.s2s;
  }
  if (s.k3 > 0) {
    ll += s.k3 * (std::log(t.alpha()) + std::log(t.b())) + (t.alpha() - 1.0) * s.s3s + (t.b() - 1.0) * s.s3t;
  }
  return ll;
}

double log_likelihood_delta(const ProblemParams& from, const ProblemParams& to, const IndicatorStats& s) {
  require_feasible(from, s);
  require_feasible(to, s);
  double d = 0.0;
  if (s.k1 > 0) d += s.k1 * log_ratio(to.n(), from.n()) + (to.u() - from.u()) * s.s1s;
  if (s.k2 > 0) {
    d += s.k2 * (log_ratio(to.beta(), from.beta()) + log_ratio(to.a(), from.a())) +
         (to.beta() - from.beta()) * s.s2t + (to.a() - from.a()) * s.s2s;
  }
  if (s.k3 > 0) {
    d += s.k3 * (log_ratio(to.alpha(), from.alpha()) + log_ratio(to.b(), from.b())) +
         (to.alpha() - from.alpha()) * s.s3s + (to.b() - from.b()) * s.s3t;
  }
  return d;
}

Eigen::Vector3d gradient(const ProblemParams& t, const IndicatorStats& s) {
  require_feasible(t, s);
  const double k2_beta = ratio(s.k2, t.beta());
  const double k3_alpha = ratio(s.k3, t.alpha());
  return {s.s1s + ratio(s.k2, t.a()) + s.s2s + k3_alpha + s.s3s,
          s.s1s + k2_beta + s.s2t + ratio(s.k3, t.b()) + s.s3t,
          ratio(s.k1, t.n()) - s.s1s - k2_beta - s.s2t - k3_alpha - s.s3s};
}

Eigen::Matrix3d hessian(const ProblemParams& t, const IndicatorStats& s) {
  require_feasible(t, s);
  const double k2_beta2 = ratio2(s.k2, t.beta());
  const double k3_alpha2 = ratio2(s.k3, t.alpha());
  Eigen::Matrix3d h;
  h(0, 0) = -ratio2(s.k2, t.a()) - k3_alpha2;
  h(1, 1) = -k2_beta2 - ratio2(s.k3, t.b());
  h(2, 2) = -ratio2(s.k1, t.n()) - k2_beta2 - k3_alpha2;
  h(0, 1) = h(1, 0) = 0.0;
  h(0, 2) = h(2, 0) = k3_alpha2;
  h(1, 2) = h(2, 1) = k2_beta2;
  return h;
}

std::string_view to_string(MlFallback fallback) noexcept {
  switch (fallback) {
    case MlFallback::all_equal:
      return "all_equal";
    case MlFallback::no_equal:
      return "no_equal";
    case MlFallback::singular_hessian:
      return "singular_hessian";
  }
  return "unknown";
}

std::string_view to_string(MlInitializer init) noexcept {
  return init == MlInitializer::hll ? "hll" : "maxsketch";
}

void MlConfig::validate() const {
  if (max_iterations < 1 || max_iterations > 10) {
    throw ContractError("max_iterations must be in [1, 10], got " + std::to_string(max_iterations));
  }
  if (!(rel_tolerance > 0.0) || !(clamp_floor_fraction > 0.0) || clamp_floor_fraction >= 0.25) {
    throw ContractError("ML tolerances must be positive (and the clamp floor fraction < 0.25)");
  }
}

MlReport ml_from_stats(const IndicatorStats& stats, const Cardinalities& init, const MlConfig& config) {
  config.validate();
  if (stats.m == 0 || stats.k1 + stats.k2 + stats.k3 != stats.m) {
    throw ContractError("ml_from_stats: inconsistent indicator statistics");
  }
  if (!(init.a > 0.0 && init.b > 0.0 && init.u > 0.0) ||
      !(std::isfinite(init.a) && std::isfinite(init.b) && std::isfinite(init.u))) {
    throw ContractError("ml_from_stats: initial cardinalities must be positive and finite");
  }

  MlReport report;
  const double rho = jaccard_estimate(stats);
  report.initial = {init.a, init.b, rho * init.u};

  if (stats.k1 == 0) {
    report.fallback = MlFallback::no_equal;
    report.a_hat = init.a;
    report.b_hat = init.b;
    report.n_hat = 0.0;
    report.converged = true;
    report.log_likelihood = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  if (stats.k2 == 0 && stats.k3 == 0) {
    report.fallback = MlFallback::all_equal;
    report.a_hat = report.b_hat = report.n_hat = init.a;
    report.converged = true;
    report.log_likelihood = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  const double floor = config.clamp_floor_fraction * init.u;
  auto clamp = [floor](double a, double b, double n) {
    a = std::max(a, 2.0 * floor);
    b = std::max(b, 2.0 * floor);
    const double upper = std::min({a - floor, b - floor, std::min(a, b) * kUpperShrink});
    n = std::clamp(n, floor, upper);
    return ProblemParams(a, b, n);
  };

  ProblemParams theta = clamp(init.a, init.b, rho * init.u);
  const ProblemParams start = theta;
  report.initial = {start.a(), start.b(), start.n()};

  bool early_stop = false;
  for (int it = 0; it < config.max_iterations; ++it) {
    const Eigen::Vector3d g = gradient(theta, stats);
    const Eigen::Matrix3d h = hessian(theta, stats);
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(h);
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    const bool singular = !lu.isInvertible() || !(lu.rcond() > 1e-14);
    if (!singular) step = lu.solve(g);
    if (singular || !step.allFinite()) {
      report.fallback = MlFallback::singular_hessian;
      theta = start;
      report.iterations = it;
      report.converged = false;
      break;
    }

    const Eigen::Vector3d x = theta.vector();
    double scale = 1.0;
    bool accepted = false;
    ProblemParams candidate = theta;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, scale *= 0.5) {
      const Eigen::Vector3d y = x - scale * step;
      candidate = clamp(y[0], y[1], y[2]);
      if (log_likelihood_delta(theta, candidate, stats) >= 0.0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Every damped step lowered the likelihood: theta is already at the
      // optimum to working precision, or the step leaves the feasible box.
      const Eigen::Vector3d y = x - step;
      report.last_rel_change = max_rel_change(theta, clamp(y[0], y[1], y[2]));
      early_stop = report.last_rel_change < config.rel_tolerance;
      report.iterations = it;
      break;
    }

    report.last_rel_change = max_rel_change(theta, candidate);
    theta = candidate;
    report.iterations = it + 1;
    if (report.last_rel_change < config.rel_tolerance) {
      early_stop = true;
      break;
    }
  }

  if (!report.fallback) report.converged = early_stop || report.last_rel_change < kConvergedChange;
  report.a_hat = theta.a();
  report.b_hat = theta.b();
  report.n_hat = theta.n();
  report.log_likelihood = log_likelihood(theta, stats);
  return report;
}

MlReport ml_estimate(const MaxSketch& sa, const MaxSketch& sb, const MlConfig& config) {
  return ml_estimate(sa, sb, config, nullptr, nullptr);
}

MlReport ml_estimate(const MaxSketch& sa, const MaxSketch& sb, const MlConfig& config,
                     const HllSketch* hll_a, const HllSketch* hll_b) {
  config.validate();
  const IndicatorStats stats = indicator_stats(sa, sb);
  const double maxsketch_a = maxsketch_cardinality(sa).value;

  Cardinalities init;
  if (config.initializer == MlInitializer::hll) {
    if (hll_a == nullptr || hll_b == nullptr) {
      throw ContractError("HyperLogLog initializer needs HyperLogLog sketches of both sets");
    }
    init = {hll_estimate(*hll_a).value, hll_estimate(*hll_b).value,
            hll_estimate(hll_merge(*hll_a, *hll_b)).value};
  } else {
    init = {maxsketch_a, maxsketch_cardinality(sb).value, maxsketch_cardinality(max_merge(sa, sb)).value};
  }

  if (stats.k1 > 0 && stats.k2 == 0 && stats.k3 == 0) {
    // Identical sketches: report the max-sketch cardinality whatever the initializer.
    init.a = maxsketch_a;
  }
  return ml_from_stats(stats, init, config);
}

}  // namespace isect
