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

// Monte-Carlo experiments over a (f, alpha, m) grid.
//
// For every grid point and trial, A = {0..a-1} and B shares the first
// n = round(alpha * a) ids of A plus round(f * a) - n ids of its own. Both sets
// are sketched, all requested estimators run, and per-scheme mean, bias and
// population variance are aggregated against the closed-form predictions.
//
// Two engines produce the sketches:
//   hashed  - every element id is hashed as a decimal token (the real pipeline);
//   sampled - sketch states are drawn from their exact distribution under
//             ideal hashing (slot maxima of k elements are Beta(k, 1);
//             HyperLogLog buckets are multinomial with geometric ranks).
// The sampled engine costs O(m) per trial instead of O(m * |A ∪ B|).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isect/intersect.hpp"

namespace isect::sim {

enum class Scheme { s1, s2, s3, ml };
std::string_view to_string(Scheme scheme) noexcept;
/// Throws ContractError for names other than s1, s2, s3, ml.
Scheme parse_scheme(std::string_view name);

/// Where Schemes 1-3 take |A|, |B|, |A ∪ B| from.
enum class CardinalitySource { hll, maxsketch };
std::string_view to_string(CardinalitySource source) noexcept;

enum class Engine { hashed, sampled };
std::string_view to_string(Engine engine) noexcept;

/// alpha = i / 20 for i = 1..19.
std::vector<double> default_alpha_grid();

struct SweepConfig {
  std::uint64_t a = 10000;
  std::vector<double> f_values{1.0, 5.0, 10.0};
  std::vector<double> alpha_values = default_alpha_grid();
  std::vector<std::size_t> m_values{256, 1024};
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  std::vector<Scheme> schemes{Scheme::s1, Scheme::s2, Scheme::s3, Scheme::ml};
  MlInitializer init = MlInitializer::maxsketch;
  /// Newton-Raphson iteration cap of the ML estimator.
  int ml_max_iterations = 3;
  CardinalitySource cards = CardinalitySource::hll;
  Engine engine = Engine::hashed;
  unsigned workers = 1;

  /// Throws ContractError on a < 10, trials < 2, alpha outside [0, 1], f <= 0,
  /// m == 0, no schemes, or a grid point whose B cannot hold the intersection.
  void validate() const;

  bool has(Scheme s) const;
};

/// a = 10^6, 10^4 trials, alpha = 0, 0.01, ..., 1, m in {100, 500, 1000, 10000}.
SweepConfig paper_scale_config();

/// HyperLogLog register count used for a grid m: m itself when it is a power
/// of two, otherwise the nearest power of two (ties round up).
std::size_t hll_size_for(std::size_t m);

struct IdRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t size() const noexcept { return end - begin; }
};

/// One synthetic pair of sets, as three disjoint id ranges.
struct Instance {
  IdRange both;    ///< A ∩ B
  IdRange a_only;  ///< A \ B
  IdRange b_only;  ///< B \ A
  std::uint64_t n = 0;

  std::uint64_t a_size() const noexcept { return both.size() + a_only.size(); }
  std::uint64_t b_size() const noexcept { return both.size() + b_only.size(); }
  std::vector<std::uint64_t> a_ids() const;
  std::vector<std::uint64_t> b_ids() const;
};

/// A = {0..a-1}, n = round(alpha*a), B = {0..n-1} ∪ {a .. a+round(f*a)-n-1},
/// every id shifted by `offset`. Throws ContractError unless a >= 1, f > 0 and
/// alpha is in [0, 1], or when round(f*a) < n.
Instance generate_instance(std::uint64_t a, double f, double alpha, std::uint64_t offset = 0);

/// Counter-based seed of one trial; independent of execution order.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t f_index, std::size_t alpha_index,
                         std::size_t m_index, std::size_t trial);

/// Everything one trial produced.
struct TrialOutcome {
  double rho_hat = 0.0;
  double a_hat = 0.0;  ///< cardinalities fed to Schemes 1-3
  double b_hat = 0.0;
  double u_hat = 0.0;
  Cardinalities maxsketch_cards;
  /// Present whenever HyperLogLog sketches were built for the trial.
  std::optional<Cardinalities> hll_cards;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  std::optional<MlReport> ml;

  double estimate(Scheme s) const;
};

/// Runs a single trial of grid point (f_index, alpha_index, m_index).
TrialOutcome run_trial(const SweepConfig& config, std::size_t f_index, std::size_t alpha_index,
                       std::size_t m_index, std::size_t trial);

/// All trials of one grid point, in trial order (parallel over config.workers).
std::vector<TrialOutcome> run_point(const SweepConfig& config, std::size_t f_index,
                                    std::size_t alpha_index, std::size_t m_index);

/// One CSV row: aggregate of one scheme at one grid point.
struct SweepRow {
  Scheme scheme = Scheme::ml;
  double f = 0.0;
  double alpha = 0.0;
  std::size_t m = 0;
  std::size_t trials = 0;
  std::uint64_t true_n = 0;
  double mean_est = 0.0;
  std::optional<double> bias_norm;  ///< |mean/n - 1|; absent for n = 0
  std::optional<double> var_norm;   ///< population Var(n_hat) / n^2; absent for n = 0
  std::optional<double> theory_var_norm;
  std::optional<double> cr_var_norm;
  /// (Var_scheme - Var_ml) / Var_scheme; absent on the ml row.
  std::optional<double> improvement_of_ml;
  std::size_t fallback_count = 0;
  std::uint64_t seed = 0;
};

/// Aggregates the outcomes of one grid point into one row per requested scheme.
std::vector<SweepRow> aggregate_point(const SweepConfig& config, std::size_t f_index,
                                      std::size_t alpha_index, std::size_t m_index,
                                      const std::vector<TrialOutcome>& outcomes);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Runs the whole grid. Output is identical for any worker count.
std::vector<SweepRow> run_sweep(const SweepConfig& config, const ProgressFn& progress = {});

inline constexpr std::string_view kCsvHeader =
    "scheme,f,alpha,m,trials,true_n,mean_est,bias_norm,var_norm,theory_var_norm,cr_var_norm,"
    "improvement_of_ml,fallback_count,seed";

/// Header plus rows sorted by (f, alpha, m, scheme); reals with 9 significant
/// digits, undefined fields as empty strings.
void write_csv(const std::vector<SweepRow>& rows, std::ostream& out);
/// Throws ContractError on empty input and IoError when the file cannot be written.
void write_csv(const std::vector<SweepRow>& rows, const std::string& path);

/// Inverse of write_csv. Throws FormatError unless the header matches exactly.
std::vector<SweepRow> read_csv(std::istream& in);

/// Formats a real with 9 significant digits (the CSV convention).
std::string format_real(double v);

}  // namespace isect::sim
