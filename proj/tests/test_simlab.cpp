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
#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "isect/errors.hpp"
#include "isect/simlab.hpp"

namespace isect::sim {
namespace {

SweepConfig small_config() {
  SweepConfig c;
  c.a = 1000;
  c.f_values = {1.0, 2.0};
  c.alpha_values = {0.0, 0.5, 1.0};
  c.m_values = {64, 100};
  c.trials = 20;
  c.engine = Engine::sampled;
  return c;
}

std::string csv_of(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_csv(rows, os);
  return os.str();
}

TEST(GenerateInstance, SmallExample) {
  const auto inst = generate_instance(4, 1.0, 0.5);
  EXPECT_EQ(inst.n, 2u);
  EXPECT_EQ(inst.a_ids(), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(inst.b_ids(), (std::vector<std::uint64_t>{0, 1, 4, 5}));
}

TEST(GenerateInstance, EdgeCases) {
  const auto same = generate_instance(50, 1.0, 1.0);
  EXPECT_EQ(same.a_ids(), same.b_ids());
  EXPECT_EQ(same.n, 50u);
  const auto disjoint = generate_instance(50, 2.0, 0.0);
  EXPECT_EQ(disjoint.n, 0u);
  EXPECT_EQ(disjoint.b_size(), 100u);
  EXPECT_EQ(disjoint.b_ids().front(), 50u);
  const auto shifted = generate_instance(4, 1.0, 0.5, 100);
  EXPECT_EQ(shifted.b_ids(), (std::vector<std::uint64_t>{100, 101, 104, 105}));
  EXPECT_THROW(generate_instance(10, 0.3, 0.5), ContractError);
  EXPECT_THROW(generate_instance(0, 1.0, 0.5), ContractError);
  EXPECT_THROW(generate_instance(10, 1.0, 1.5), ContractError);
  EXPECT_THROW(generate_instance(10, -1.0, 0.5), ContractError);
}

TEST(SweepConfig, DefaultsAndValidation) {
  SweepConfig c;
  EXPECT_EQ(c.a, 10000u);
  EXPECT_EQ(c.trials, 2000u);
  ASSERT_EQ(c.alpha_values.size(), 19u);
  EXPECT_EQ(c.alpha_values.front(), 0.05);
  EXPECT_EQ(c.alpha_values[9], 0.5);
  EXPECT_EQ(c.alpha_values.back(), 0.95);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.a = 9;
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.trials = 1;
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.alpha_values = {1.2};
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.f_values = {0.0};
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.f_values = {0.2};
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.schemes.clear();
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(SweepConfig, PaperScale) {
  const auto c = paper_scale_config();
  EXPECT_EQ(c.a, 1000000u);
  EXPECT_EQ(c.trials, 10000u);
  EXPECT_EQ(c.alpha_values.size(), 101u);
  EXPECT_EQ(c.alpha_values.front(), 0.0);
  EXPECT_EQ(c.alpha_values.back(), 1.0);
  EXPECT_EQ(c.m_values, (std::vector<std::size_t>{100, 500, 1000, 10000}));
  EXPECT_NO_THROW(c.validate());
}

TEST(HllSize, NearestPowerOfTwo) {
  EXPECT_EQ(hll_size_for(256), 256u);
  EXPECT_EQ(hll_size_for(100), 128u);
  EXPECT_EQ(hll_size_for(500), 512u);
  EXPECT_EQ(hll_size_for(1000), 1024u);
  EXPECT_EQ(hll_size_for(10000), 8192u);
  EXPECT_EQ(hll_size_for(96), 128u);
}

TEST(TrialSeed, DistinctAcrossCoordinates) {
  std::set<std::uint64_t> seen;
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t t = 0; t < 50; ++t) seen.insert(trial_seed(7, f, a, m, t));
  EXPECT_EQ(seen.size(), 3u * 5 * 2 * 50);
  EXPECT_NE(trial_seed(7, 0, 0, 0, 0), trial_seed(8, 0, 0, 0, 0));
}

TEST(Aggregate, DegenerateTwoTrials) {
  SweepConfig c;
  c.a = 100;
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {64};
  c.trials = 2;
  TrialOutcome o;
  o.s1 = o.s2 = o.s3 = 55.0;
  o.ml = MlReport{};
  o.ml->n_hat = 55.0;
  const auto rows = aggregate_point(c, 0, 0, 0, {o, o});
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(*r.var_norm, 0.0);
    EXPECT_NEAR(*r.bias_norm, 0.1, 1e-15);
    EXPECT_EQ(r.mean_est, 55.0);
    EXPECT_EQ(r.true_n, 50u);
    EXPECT_EQ(r.trials, 2u);
    EXPECT_FALSE(r.improvement_of_ml);
  }
}

TEST(Aggregate, PopulationVarianceAndImprovement) {
  SweepConfig c;
  c.a = 100;
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {64};
  c.trials = 2;
  c.schemes = {Scheme::s2, Scheme::ml};
  TrialOutcome x, y;
  x.s2 = 40;
  y.s2 = 60;
  x.ml = MlReport{};
  y.ml = MlReport{};
  x.ml->n_hat = 45;
  y.ml->n_hat = 55;
  y.ml->fallback = MlFallback::singular_hessian;
  const auto rows = aggregate_point(c, 0, 0, 0, {x, y});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(*rows[0].var_norm, 100.0 / 2500, 1e-15);
  EXPECT_NEAR(*rows[1].var_norm, 25.0 / 2500, 1e-15);
  EXPECT_NEAR(*rows[0].improvement_of_ml, 0.75, 1e-15);
  EXPECT_FALSE(rows[1].improvement_of_ml);
  EXPECT_EQ(rows[1].fallback_count, 1u);
  EXPECT_EQ(rows[0].fallback_count, 0u);
  EXPECT_NEAR(*rows[0].theory_var_norm, 1.0 / (64 * (50.0 / 150)), 1e-15);
  EXPECT_EQ(rows[0].cr_var_norm, rows[1].cr_var_norm);
  EXPECT_EQ(rows[1].theory_var_norm, rows[1].cr_var_norm);
}

TEST(Sweep, ZeroIntersectionLeavesNormalizedFieldsEmpty) {
  auto c = small_config();
  c.f_values = {1.0};
  c.alpha_values = {0.0};
  c.m_values = {64};
  const auto rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.true_n, 0u);
    EXPECT_FALSE(r.bias_norm);
    EXPECT_FALSE(r.var_norm);
    EXPECT_FALSE(r.theory_var_norm);
    EXPECT_FALSE(r.cr_var_norm);
    if (r.scheme == Scheme::ml) {
      EXPECT_EQ(r.fallback_count, c.trials);
      EXPECT_EQ(r.mean_est, 0.0);
    }
  }
}

TEST(Sweep, InvariantsOnSmallGrid) {
  const auto rows = run_sweep(small_config());
  EXPECT_EQ(rows.size(), 2u * 3 * 2 * 4);
  for (const auto& r : rows) {
    if (r.bias_norm) {
      EXPECT_GE(*r.bias_norm, 0.0);
    }
    if (r.var_norm) {
      EXPECT_GE(*r.var_norm, 0.0);
    }
    if (r.improvement_of_ml) {
      EXPECT_LE(*r.improvement_of_ml, 1.0);
    }
    EXPECT_TRUE(std::isfinite(r.mean_est));
  }
}

TEST(Csv, HeaderShapeAndOrder) {
  auto c = small_config();
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {64};
  const std::string text = csv_of(run_sweep(c));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "scheme,f,alpha,m,trials,true_n,mean_est,bias_norm,var_norm,theory_var_norm,cr_var_norm,"
            "improvement_of_ml,fallback_count,seed");
  std::vector<std::string> schemes;
  while (std::getline(in, line)) schemes.push_back(line.substr(0, 2));
  EXPECT_EQ(schemes, (std::vector<std::string>{"ml", "s1", "s2", "s3"}));
}

TEST(Csv, RoundTrip) {
  const auto rows = run_sweep(small_config());
  const std::string text = csv_of(rows);
  std::istringstream in(text);
  const auto back = read_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(csv_of(back), text);
  std::istringstream bad("scheme,f\n");
  EXPECT_THROW(read_csv(bad), FormatError);
}

TEST(Csv, RowsSortedByGridThenScheme) {
  auto rows = run_sweep(small_config());
  std::reverse(rows.begin(), rows.end());
  std::istringstream in(csv_of(rows));
  const auto back = read_csv(in);
  for (std::size_t i = 1; i < back.size(); ++i) {
    const auto& p = back[i - 1];
    const auto& q = back[i];
    EXPECT_LE(std::make_tuple(p.f, p.alpha, p.m, to_string(p.scheme)),
              std::make_tuple(q.f, q.alpha, q.m, to_string(q.scheme)));
  }
}

TEST(Csv, NineSignificantDigits) {
  EXPECT_EQ(format_real(1.0 / 3), "0.333333333");
  EXPECT_EQ(format_real(0.05), "0.05");
  EXPECT_EQ(format_real(2.0926339285714285e-3), "0.00209263393");
  EXPECT_EQ(format_real(1234567891234.0), "1.23456789e+12");
}

TEST(Csv, WriteErrors) {
  EXPECT_THROW(write_csv(std::vector<SweepRow>{}, std::string("/tmp/x.csv")), ContractError);
  const auto rows = run_sweep(small_config());
  EXPECT_THROW(write_csv(rows, std::string("/nonexistent-dir/out.csv")), IoError);
  const auto path = (std::filesystem::temp_directory_path() / "isect_sweep.csv").string();
  write_csv(rows, path);
  EXPECT_TRUE(std::filesystem::exists(path));
  std::filesystem::remove(path);
}

TEST(Determinism, IndependentOfWorkerCount) {
  auto c = small_config();
  const std::string one = csv_of(run_sweep(c));
  c.workers = 4;
  EXPECT_EQ(csv_of(run_sweep(c)), one);
  EXPECT_EQ(csv_of(run_sweep(c)), one);
  c.seed = 2;
  EXPECT_NE(csv_of(run_sweep(c)), one);
}

TEST(Determinism, HashedEngine) {
  auto c = small_config();
  c.engine = Engine::hashed;
  c.a = 200;
  c.trials = 4;
  const std::string one = csv_of(run_sweep(c));
  c.workers = 3;
  EXPECT_EQ(csv_of(run_sweep(c)), one);
}

TEST(Engines, AgreeOnJaccardDistribution) {
  SweepConfig c;
  c.a = 1000;
  c.f_values = {1.0};
  c.alpha_values = {0.5};
  c.m_values = {256};
  c.trials = 300;
  c.schemes = {Scheme::s2};
  c.cards = CardinalitySource::maxsketch;
  const double sd = std::sqrt((1.0 / 3) * (2.0 / 3) / 256 / 300);
  for (Engine e : {Engine::hashed, Engine::sampled}) {
    c.engine = e;
    double mean = 0;
    for (const auto& o : run_point(c, 0, 0, 0)) mean += o.rho_hat;
    mean /= 300;
    EXPECT_NEAR(mean, 1.0 / 3, 4 * sd) << to_string(e);
  }
}

TEST(Sweep, IdenticalSetsAreEasy) {
  auto c = small_config();
  c.f_values = {1.0};
  c.alpha_values = {1.0};
  c.m_values = {1024};
  c.trials = 100;
  for (const auto& r : run_sweep(c)) EXPECT_LT(*r.bias_norm, 0.02) << to_string(r.scheme);
}

TEST(Schemes, Parse) {
  EXPECT_EQ(parse_scheme("ml"), Scheme::ml);
  EXPECT_EQ(parse_scheme("s3"), Scheme::s3);
  EXPECT_THROW(parse_scheme("s4"), ContractError);
}

}  // namespace
}  // namespace isect::sim
