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

#include "isect/theory.hpp"

#include <string>

#include "isect/errors.hpp"

namespace isect::theory {

namespace {

void require_m(std::size_t m) {
  if (m == 0) throw ContractError("number of hash functions m must be positive");
}

void require_interior(const ProblemParams& p, const char* what) {
  if (p.n() > 0.0 && p.alpha() > 0.0 && p.beta() > 0.0) return;
  throw SingularParametersError(std::string(what) + " is singular when n, a - n or b - n is zero");
}

void require_intersection(const ProblemParams& p, const char* what) {
  if (p.n() > 0.0) return;
  throw SingularParametersError(std::string(what) + " is undefined for n = 0");
}

}  // namespace

double z_value(const ProblemParams& p) {
  const double a2 = p.a() * p.a() + p.alpha() * p.beta();
  const double b2 = p.b() * p.b() + p.alpha() * p.beta();
  return p.alpha() * p.n() * a2 + p.beta() * p.n() * b2 + a2 * b2;
}

Eigen::Matrix3d fisher_matrix(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_interior(p, "Fisher information");
  const double u = p.u();
  const double al = p.alpha();
  const double be = p.beta();
  Eigen::Matrix3d f;
  f(0, 0) = be / (u * p.a() * p.a()) + 1.0 / (u * al);
  f(1, 1) = al / (u * p.b() * p.b()) + 1.0 / (u * be);
  f(2, 2) = 1.0 / (u * p.n()) + 1.0 / (u * be) + 1.0 / (u * al);
  f(0, 1) = f(1, 0) = 0.0;
  f(0, 2) = f(2, 0) = -1.0 / (u * al);
  f(1, 2) = f(2, 1) = -1.0 / (u * be);
  return static_cast<double>(m) * f;
}

double cramer_rao_closed_form(const ProblemParams& p, std::size_t m) {
  require_m(m);
  const double ab = p.alpha() * p.beta();
  const double a2 = p.a() * p.a() + ab;
  const double b2 = p.b() * p.b() + ab;
  return p.n() * p.u() / static_cast<double>(m) * (b2 * a2) / z_value(p);
}

double cramer_rao_n(const ProblemParams& p, std::size_t m) {
  require_interior(p, "Cramer-Rao bound");
  return cramer_rao_closed_form(p, m);
}

double var_scheme1_norm(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_intersection(p, "Scheme-1 normalized variance");
  const double a = p.a(), b = p.b(), n = p.n(), u = p.u();
  const double ab = p.alpha() * p.beta();
  const double md = static_cast<double>(m);
  return (u * u - a * a - b * b) / (md * n * n) - 2.0 * a * b / (md * u * n) +
         2.0 * u * (a * a * (b * b + ab) + b * b * (a * a + ab)) / (md * z_value(p) * n);
}

double var_scheme2_norm(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_intersection(p, "Scheme-2 normalized variance");
  return p.u() / (static_cast<double>(m) * p.n());
}

double var_scheme3_norm(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_intersection(p, "Scheme-3 normalized variance");
  const double a = p.a(), b = p.b(), n = p.n(), u = p.u();
  const double s = a + b;
  return (1.0 + 2.0 * a * b / (u * s) + (p.alpha() + p.beta()) * u * u / (n * s * s)) /
         static_cast<double>(m);
}

double cov_ab(const ProblemParams& p, std::size_t m) {
  require_m(m);
  return p.n() * p.a() * p.b() / (static_cast<double>(m) * p.u());
}

double cov_an(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_interior(p, "Cov(a, n)");
  const double ab = p.alpha() * p.beta();
  return p.u() * p.n() * p.a() * p.a() * (p.b() * p.b() + ab) / (static_cast<double>(m) * z_value(p));
}

double cov_au(const ProblemParams& p, std::size_t m) {
  return p.a() * p.a() / static_cast<double>(m) + cov_ab(p, m) - cov_an(p, m);
}

double cov_bu(const ProblemParams& p, std::size_t m) {
  // Mirror image: swap the roles of A and B.
  const ProblemParams q(p.b(), p.a(), p.n());
  return p.b() * p.b() / static_cast<double>(m) + cov_ab(p, m) - cov_an(q, m);
}

BetaMoments beta_max_moments(double n) {
  if (!(n >= 1.0)) throw ContractError("beta_max_moments needs n >= 1");
  return {n / (n + 1.0), n / ((n + 1.0) * (n + 1.0) * (n + 2.0))};
}

TheoryReport theory_report(const ProblemParams& p, std::size_t m) {
  require_m(m);
  require_intersection(p, "theory report");
  const bool boundary = !(p.alpha() > 0.0 && p.beta() > 0.0);
  const double cr = cramer_rao_closed_form(p, m);
  TheoryReport r{p,
                 m,
                 std::nullopt,
                 cr,
                 cr / (p.n() * p.n()),
                 var_scheme1_norm(p, m),
                 var_scheme2_norm(p, m),
                 var_scheme3_norm(p, m),
                 cov_ab(p, m),
                 std::nullopt,
                 std::nullopt,
                 std::nullopt,
                 z_value(p),
                 boundary};
  if (!boundary) {
    r.fisher = fisher_matrix(p, m);
    r.cov_an = cov_an(p, m);
    r.cov_au = cov_au(p, m);
    r.cov_bu = cov_bu(p, m);
  }
  return r;
}

}  // namespace isect::theory
