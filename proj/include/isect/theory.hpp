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

// Closed-form variance predictions for the four intersection estimators.
//
// Everything is evaluated in double precision with (a, b, n) as reals. The
// functions that are singular on the boundary (n = 0, alpha = 0 or beta = 0)
// throw SingularParametersError instead of returning a limit.

#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "isect/intersect.hpp"

namespace isect::theory {

/// Z = alpha*n*(a^2 + alpha*beta) + beta*n*(b^2 + alpha*beta) + (a^2 + alpha*beta)(b^2 + alpha*beta).
double z_value(const ProblemParams& p);

/// Expected Fisher information of m slots with respect to (a, b, n).
Eigen::Matrix3d fisher_matrix(const ProblemParams& p, std::size_t m);

/// (F^-1)[n, n] by its closed form. Singular at the boundary.
double cramer_rao_n(const ProblemParams& p, std::size_t m);

/// The same closed form without the boundary check. Finite whenever Z > 0,
/// and on alpha = 0 or beta = 0 it is the limit of cramer_rao_n.
double cramer_rao_closed_form(const ProblemParams& p, std::size_t m);

/// Normalized variances Var(n_hat / n) of the three classical schemes.
double var_scheme1_norm(const ProblemParams& p, std::size_t m);
double var_scheme2_norm(const ProblemParams& p, std::size_t m);
double var_scheme3_norm(const ProblemParams& p, std::size_t m);

/// Covariances between the cardinality estimates of A, B, A ∪ B and the ML n.
double cov_ab(const ProblemParams& p, std::size_t m);
double cov_an(const ProblemParams& p, std::size_t m);
double cov_au(const ProblemParams& p, std::size_t m);
double cov_bu(const ProblemParams& p, std::size_t m);

struct BetaMoments {
  double mean;
  double variance;
};

/// Mean and variance of the maximum of n independent Uniform(0, 1) variables (Beta(n, 1)).
BetaMoments beta_max_moments(double n);

struct TheoryReport {
  ProblemParams params;
  std::size_t m;
  /// Absent on the boundary, where the matrix is singular.
  std::optional<Eigen::Matrix3d> fisher;
  double cr_var_n;
  double cr_var_norm;
  double var_scheme1_norm;
  double var_scheme2_norm;
  double var_scheme3_norm;
  double cov_ab;
  /// Boundary-singular covariances are absent there.
  std::optional<double> cov_au;
  std::optional<double> cov_bu;
  std::optional<double> cov_an;
  double z_value;
  bool boundary;
};

/// Throws SingularParametersError when n = 0 (every normalized quantity is undefined).
TheoryReport theory_report(const ProblemParams& p, std::size_t m);

}  // namespace isect::theory
