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

#include <cmath>
#include <random>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "isect/errors.hpp"
#include "isect/hashkit.hpp"
#include "isect/intersect.hpp"
#include "isect/simlab.hpp"
#include "isect/theory.hpp"

namespace isect::theory {
namespace {

ProblemParams random_interior(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> card(1.0, 1e6), frac(0.01, 0.99);
  const double a = card(rng), b = card(rng);
  return ProblemParams(a, b, frac(rng) * std::min(a, b));
}

// -H with the class counts replaced by their expectations.
Eigen::Matrix3d expected_neg_hessian(const ProblemParams& p, std::size_t m) {
  const double md = static_cast<double>(m);
  const IndicatorStats only1{1, 1, 0, 0, -1, 0, 0, 0, 0};
  const IndicatorStats only2{1, 0, 1, 0, 0, -1, -1, 0, 0};
  const IndicatorStats only3{1, 0, 0, 1, 0, 0, 0, -1, -1};
  return -(md * p.n() / p.u() * hessian(p, only1) + md * p.beta() / p.u() * hessian(p, only2) +
           md * p.alpha() / p.u() * hessian(p, only3));
}

TEST(Theory, ReferencePoint) {
  const ProblemParams p(100, 100, 50);
  const auto f = fisher_matrix(p, 1000);
  EXPECT_NEAR(f(0, 0), 1.0 / 6, 1e-12);
  EXPECT_NEAR(f(0, 2), -2.0 / 15, 1e-12);
  EXPECT_NEAR(f(2, 2), 0.4, 1e-12);
  EXPECT_EQ(f(0, 1), 0.0);
  EXPECT_EQ(f(1, 0), 0.0);
  EXPECT_NEAR(cramer_rao_n(p, 1000), 5.357142857142855, 1e-12);
  EXPECT_NEAR(cramer_rao_n(p, 1000) / 2500, 2.142857142857143e-3, 1e-15);
  EXPECT_NEAR(var_scheme1_norm(p, 1000), 5.190476190476190e-3, 1e-15);
  EXPECT_NEAR(var_scheme2_norm(p, 1000), 3e-3, 1e-15);
  EXPECT_NEAR(var_scheme3_norm(p, 1000), 2.7916666666666667e-3, 1e-15);
  EXPECT_NEAR(cov_ab(p, 1000), 10.0 / 3, 1e-12);
  EXPECT_NEAR(cov_an(p, 1000), 4.285714285714286, 1e-12);
  EXPECT_NEAR(cov_au(p, 1000), 9.047619047619047, 1e-12);
  EXPECT_NEAR(cov_bu(p, 1000), cov_au(p, 1000), 1e-12);
  EXPECT_GT(z_value(p), 0.0);
}

TEST(Theory, DeskScalePoint) {
  const ProblemParams p(1e4, 1e4, 5000);
  EXPECT_NEAR(cramer_rao_n(p, 1024) / 25e6, 2.0926339285714285e-3, 1e-15);
  EXPECT_NEAR(var_scheme1_norm(p, 1024), 5.068824404761904e-3, 1e-15);
  EXPECT_NEAR(var_scheme2_norm(p, 1024), 2.9296875e-3, 1e-15);
  EXPECT_NEAR(var_scheme3_norm(p, 1024), 2.7262369791666665e-3, 1e-15);
}

TEST(Theory, ClosedFormEqualsNumericInverse) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_interior(rng);
    const Eigen::Matrix3d inv = fisher_matrix(p, 512).inverse();
    EXPECT_NEAR(cramer_rao_n(p, 512) / inv(2, 2), 1.0, 1e-10);
    EXPECT_NEAR(cov_an(p, 512) / inv(0, 2), 1.0, 1e-9);
  }
}

TEST(Theory, ExpectedNegativeHessianIsFisher) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_interior(rng);
    const Eigen::Matrix3d f = fisher_matrix(p, 300);
    const Eigen::Matrix3d e = expected_neg_hessian(p, 300);
    EXPECT_LE((f - e).cwiseAbs().maxCoeff(), 1e-12 * f.cwiseAbs().maxCoeff());
    EXPECT_EQ(f, f.transpose());
    EXPECT_GT(f.determinant(), 0.0);
  }
}

TEST(Theory, Scheme2NeverBeatsScheme3) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_interior(rng);
    EXPECT_GE(var_scheme2_norm(p, 100), var_scheme3_norm(p, 100));
  }
}

TEST(Theory, CramerRaoBelowSchemes2And3) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_interior(rng);
    const double cr = cramer_rao_n(p, 100) / (p.n() * p.n());
    EXPECT_LE(cr, var_scheme2_norm(p, 100) * (1 + 1e-12));
    EXPECT_LE(cr, var_scheme3_norm(p, 100) * (1 + 1e-12));
  }
}

TEST(Theory, IdenticalSetLimits) {
  const ProblemParams p(300, 300, 300);
  EXPECT_NEAR(var_scheme1_norm(p, 250), 1.0 / 250, 1e-15);
  EXPECT_NEAR(var_scheme2_norm(p, 250), 1.0 / 250, 1e-15);
  EXPECT_NEAR(var_scheme3_norm(p, 250), 2.0 / 250, 1e-15);
  EXPECT_NEAR(cramer_rao_closed_form(p, 250) / (300.0 * 300.0), 1.0 / 250, 1e-15);
  // Approaching the boundary from the interior.
  const ProblemParams q(300, 300, 300 * (1 - 1e-9));
  EXPECT_NEAR(cramer_rao_n(q, 250) / (q.n() * q.n()), 1.0 / 250, 1e-9);
  EXPECT_NEAR(cov_an(q, 250) / (300.0 * 300.0 / 250), 1.0, 1e-6);
  const auto r = theory_report(p, 250);
  EXPECT_TRUE(r.boundary);
  EXPECT_FALSE(r.fisher);
  EXPECT_FALSE(r.cov_an);
  EXPECT_NEAR(r.cr_var_norm, 1.0 / 250, 1e-15);
}

TEST(Theory, BoundaryErrors) {
  EXPECT_THROW(fisher_matrix(ProblemParams(10, 10, 10), 8), SingularParametersError);
  EXPECT_THROW(fisher_matrix(ProblemParams(10, 10, 0), 8), SingularParametersError);
  EXPECT_THROW(cramer_rao_n(ProblemParams(10, 20, 10), 8), SingularParametersError);
  EXPECT_THROW(var_scheme1_norm(ProblemParams(10, 10, 0), 8), SingularParametersError);
  EXPECT_THROW(var_scheme2_norm(ProblemParams(10, 10, 0), 8), SingularParametersError);
  EXPECT_THROW(var_scheme3_norm(ProblemParams(10, 10, 0), 8), SingularParametersError);
  EXPECT_THROW(cov_au(ProblemParams(10, 10, 10), 8), SingularParametersError);
  EXPECT_THROW(theory_report(ProblemParams(10, 10, 0), 8), SingularParametersError);
  EXPECT_EQ(cov_ab(ProblemParams(10, 10, 0), 8), 0.0);
  EXPECT_THROW(beta_max_moments(0.5), ContractError);
}

TEST(Theory, ReportFields) {
  const auto r = theory_report(ProblemParams(100, 100, 50), 1000);
  EXPECT_FALSE(r.boundary);
  ASSERT_TRUE(r.fisher);
  EXPECT_NEAR((*r.fisher)(2, 2), 0.4, 1e-12);
  EXPECT_NEAR(r.cr_var_norm, 2.142857142857143e-3, 1e-15);
  EXPECT_NEAR(*r.cov_au, 9.047619047619047, 1e-12);
  EXPECT_NEAR(r.z_value, z_value(ProblemParams(100, 100, 50)), 0.0);
}

TEST(BetaMax, Moments) {
  const auto one = beta_max_moments(1);
  EXPECT_DOUBLE_EQ(one.mean, 0.5);
  EXPECT_DOUBLE_EQ(one.variance, 1.0 / 12);
  const auto nine = beta_max_moments(9);
  EXPECT_DOUBLE_EQ(nine.mean, 0.9);
  EXPECT_NEAR(nine.variance, 9.0 / 1100, 1e-16);
}

TEST(BetaMax, HashedMaximaMatchMoments) {
  constexpr int kSamples = 100000;
  const HashFamily fam(2024, kSamples);
  const auto mo = beta_max_moments(50);
  double s = 0, s2 = 0;
  for (int k = 0; k < kSamples; ++k) {
    double mx = 0;
    for (int i = 0; i < 50; ++i) mx = std::max(mx, to_unit(hash64(fam, k, std::to_string(i))));
    s += mx;
    s2 += mx * mx;
  }
  const double mean = s / kSamples;
  const double var = s2 / kSamples - mean * mean;
  EXPECT_LT(std::abs(mean - mo.mean), 3 * std::sqrt(mo.variance / kSamples));
  // Standard error of the sample variance: sqrt((mu4 - sigma^4) / N), from raw moments n / (n + k).
  const double n = 50, mu = mo.mean;
  auto raw = [&](double k) { return n / (n + k); };
  const double mu4 = raw(4) - 4 * mu * raw(3) + 6 * mu * mu * raw(2) - 3 * mu * mu * mu * mu;
  const double se_var = std::sqrt((mu4 - mo.variance * mo.variance) / kSamples);
  EXPECT_LT(std::abs(var - mo.variance), 3 * se_var);
}

// Average -H over single-slot draws from the true model.
TEST(Fisher, MonteCarloNegativeHessian) {
  const ProblemParams p(100, 80, 50);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  constexpr int kDraws = 10000;
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero(), sum2 = Eigen::Matrix3d::Zero();
  for (int d = 0; d < kDraws; ++d) {
    const double xb = std::pow(uni(rng), 1 / p.n());
    const double xa = std::pow(uni(rng), 1 / p.alpha());
    const double xo = std::pow(uni(rng), 1 / p.beta());
    const double s = std::max(xb, xa), t = std::max(xb, xo);
    IndicatorStats st;
    st.m = 1;
    if (xb > xa && xb > xo) {
      st.k1 = 1;
      st.s1s = std::log(s);
    } else if (s < t) {
      st.k2 = 1;
      st.s2s = std::log(s);
      st.s2t = std::log(t);
    } else {
      st.k3 = 1;
      st.s3s = std::log(s);
      st.s3t = std::log(t);
    }
    const Eigen::Matrix3d h = -hessian(p, st);
    sum += h;
    sum2 += h.cwiseProduct(h);
  }
  const Eigen::Matrix3d mean = sum / kDraws;
  const Eigen::Matrix3d f = fisher_matrix(p, 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double var = sum2(i, j) / kDraws - mean(i, j) * mean(i, j);
      const double se = std::sqrt(std::max(var, 0.0) / kDraws);
      EXPECT_LE(std::abs(mean(i, j) - f(i, j)), 3 * se + 1e-15) << i << "," << j;
    }
  }
}

TEST(Covariance, MonteCarloCovAb) {
  sim::SweepConfig c;
  c.a = 1000;
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {1024};
  c.trials = 10000;
  c.engine = sim::Engine::sampled;
  c.cards = sim::CardinalitySource::maxsketch;
  c.schemes = {sim::Scheme::s1};
  const auto out = sim::run_point(c, 0, 0, 0);
  double ma = 0, mb = 0;
  for (const auto& o : out) {
    ma += o.a_hat;
    mb += o.b_hat;
  }
  ma /= out.size();
  mb /= out.size();
  double cov = 0, cov2 = 0;
  for (const auto& o : out) {
    const double x = (o.a_hat - ma) * (o.b_hat - mb);
    cov += x;
    cov2 += x * x;
  }
  cov /= out.size();
  const double se = std::sqrt((cov2 / out.size() - cov * cov) / out.size());
  EXPECT_LE(std::abs(cov - cov_ab(ProblemParams(1000, 1000, 500), 1024)), 3 * se);
}

// Closed-form Scheme 1 prediction against HyperLogLog-based Scheme 1 (a = 10^4, alpha = 0.5, f = 1, m = 1024).
TEST(Scheme1, MonteCarloWithHllCardinalities) {
  sim::SweepConfig c;
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {1024};
  c.trials = 2000;
  c.engine = sim::Engine::sampled;
  c.cards = sim::CardinalitySource::hll;
  c.schemes = {sim::Scheme::s1};
  const auto rows = sim::aggregate_point(c, 0, 0, 0, sim::run_point(c, 0, 0, 0));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(*rows[0].var_norm / var_scheme1_norm(ProblemParams(1e4, 1e4, 5000), 1024), 1.0, 0.2);
}

}  // namespace
}  // namespace isect::theory
