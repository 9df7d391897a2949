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

#include "isect/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "isect/cardinality.hpp"
#include "isect/errors.hpp"
#include "isect/hashkit.hpp"
#include "isect/sketch.hpp"
#include "isect/theory.hpp"

namespace isect::sim {

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::s1: return "s1";
    case Scheme::s2: return "s2";
    case Scheme::s3: return "s3";
    case Scheme::ml: return "ml";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::s1, Scheme::s2, Scheme::s3, Scheme::ml}) {
    if (to_string(s) == name) return s;
  }
  throw ContractError("unknown scheme '" + std::string(name) + "' (expected s1, s2, s3 or ml)");
}

std::string_view to_string(CardinalitySource source) noexcept {
  return source == CardinalitySource::hll ? "hll" : "maxsketch";
}

std::string_view to_string(Engine engine) noexcept {
  return engine == Engine::hashed ? "hashed" : "sampled";
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}

namespace {

std::uint64_t round_count(double x) { return static_cast<std::uint64_t>(std::llround(x)); }

std::uint64_t b_size_of(std::uint64_t a, double f) { return round_count(f * static_cast<double>(a)); }

bool needs_hll(const SweepConfig& c) {
  const bool classical = c.has(Scheme::s1) || c.has(Scheme::s2) || c.has(Scheme::s3);
  return (classical && c.cards == CardinalitySource::hll) ||
         (c.has(Scheme::ml) && c.init == MlInitializer::hll);
}

}  // namespace

bool SweepConfig::has(Scheme s) const { return std::find(schemes.begin(), schemes.end(), s) != schemes.end(); }

void SweepConfig::validate() const {
  if (a < 10) throw ContractError("a must be at least 10");
  if (trials < 2) throw ContractError("trials must be at least 2");
  if (f_values.empty() || alpha_values.empty() || m_values.empty()) {
    throw ContractError("f, alpha and m grids must be non-empty");
  }
  if (schemes.empty()) throw ContractError("at least one scheme is required");
  MlConfig mc;
  mc.max_iterations = ml_max_iterations;
  mc.validate();
  for (double f : f_values) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ContractError("every f must be positive");
  }
  for (double al : alpha_values) {
    if (!(al >= 0.0 && al <= 1.0)) throw ContractError("every alpha must lie in [0, 1]");
  }
  for (std::size_t m : m_values) {
    if (m == 0) throw ContractError("every m must be positive");
    if (needs_hll(*this) && hll_size_for(m) < 4) throw ContractError("m too small for HyperLogLog");
  }
  for (double f : f_values) {
    for (double al : alpha_values) {
      if (b_size_of(a, f) < round_count(al * static_cast<double>(a))) {
        throw ContractError("infeasible grid point: round(f*a) < round(alpha*a)");
      }
    }
  }
}

SweepConfig paper_scale_config() {
  SweepConfig c;
  c.a = 1000000;
  c.trials = 10000;
  c.alpha_values.clear();
  for (int i = 0; i <= 100; ++i) c.alpha_values.push_back(i / 100.0);
  c.m_values = {100, 500, 1000, 10000};
  return c;
}

std::size_t hll_size_for(std::size_t m) {
  if (m == 0) throw ContractError("m must be positive");
  if (std::has_single_bit(m)) return m;
  const std::size_t lo = std::bit_floor(m);
  const std::size_t hi = lo << 1;
  return (m - lo < hi - m) ? lo : hi;
}

std::vector<std::uint64_t> Instance::a_ids() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(a_size());
  for (auto i = both.begin; i < both.end; ++i) ids.push_back(i);
  for (auto i = a_only.begin; i < a_only.end; ++i) ids.push_back(i);
  return ids;
}

std::vector<std::uint64_t> Instance::b_ids() const {
  std::vector<std::uint64_t> ids;
  ids.reserve(b_size());
  for (auto i = both.begin; i < both.end; ++i) ids.push_back(i);
  for (auto i = b_only.begin; i < b_only.end; ++i) ids.push_back(i);
  return ids;
}

Instance generate_instance(std::uint64_t a, double f, double alpha, std::uint64_t offset) {
  if (a < 1) throw ContractError("a must be at least 1");
  if (!(f > 0.0) || !std::isfinite(f)) throw ContractError("f must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  const std::uint64_t n = round_count(alpha * static_cast<double>(a));
  const std::uint64_t b = b_size_of(a, f);
  if (b < n) throw ContractError("infeasible instance: round(f*a) < n");
  Instance inst;
  inst.n = n;
  inst.both = {offset, offset + n};
  inst.a_only = {offset + n, offset + a};
  inst.b_only = {offset + a, offset + a + (b - n)};
  return inst;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t f_index, std::size_t alpha_index,
                         std::size_t m_index, std::size_t trial) {
  std::uint64_t s = mix64(seed ^ 0x73696d6c61622d31ULL);
  for (std::uint64_t x : {std::uint64_t{f_index}, std::uint64_t{alpha_index}, std::uint64_t{m_index},
                          std::uint64_t{trial}}) {
    s = mix64(s + 0x9e3779b97f4a7c15ULL * (x + 1));
  }
  return s;
}

double TrialOutcome::estimate(Scheme s) const {
  switch (s) {
    case Scheme::s1: return s1;
    case Scheme::s2: return s2;
    case Scheme::s3: return s3;
    case Scheme::ml: return ml ? ml->n_hat : std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct PartSketches {
  MaxSketch both, a_only, b_only;
  std::optional<HllSketch> h_both, h_a_only, h_b_only;
};

void hashed_part(const IdRange& range, MaxSketch& ms, HllSketch* hs) {
  char buf[24];
  for (auto id = range.begin; id < range.end; ++id) {
    const auto res = std::to_chars(buf, buf + sizeof buf, id);
    const std::string_view token(buf, static_cast<std::size_t>(res.ptr - buf));
    ms.update(token);
    if (hs) hs->update(token);
  }
}

// Uniform on (0, 1) with 53 random bits.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Slot maxima of k ideal hashes: 1 - max ~ 1 - U^(1/k), stored as the raw word
// whose unit complement is that value.
MaxSketch sampled_max(const HashFamily& fam, std::uint64_t k, std::mt19937_64& rng) {
  if (k == 0) return MaxSketch(fam);
  std::vector<std::uint64_t> raw(fam.size());
  const double kd = static_cast<double>(k);
  for (auto& w : raw) {
    const double comp = -std::expm1(std::log(open_uniform(rng)) / kd);
    const double scaled = std::floor(comp * 0x1.0p64);
    const std::uint64_t below =
        scaled >= 0x1.0p64 ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(scaled);
    w = ~below;
  }
  return MaxSketch::from_maxima(fam, std::move(raw), k);
}

// Registers of k ideal hashes: multinomial bucket loads, then the maximum of
// c geometric ranks per bucket, P(R <= r) = (1 - 2^-r)^c.
HllSketch sampled_hll(const HashFamily& fam, std::uint64_t k, std::mt19937_64& rng) {
  const std::size_t m = fam.size();
  std::vector<std::uint8_t> regs(m, 0);
  if (k == 0) return HllSketch::from_registers(fam, std::move(regs), 0);
  const unsigned p = static_cast<unsigned>(std::countr_zero(m));
  const double cap = 64.0 - p + 1.0;
  std::uint64_t left = k;
  for (std::size_t j = 0; j < m && left > 0; ++j) {
    std::uint64_t c = left;
    if (j + 1 < m) {
      std::binomial_distribution<std::uint64_t> bin(left, 1.0 / static_cast<double>(m - j));
      c = bin(rng);
    }
    left -= c;
    if (c == 0) continue;
    const double q = -std::expm1(std::log(open_uniform(rng)) / static_cast<double>(c));
    const double r = std::clamp(std::ceil(-std::log2(q)), 1.0, cap);
    regs[j] = static_cast<std::uint8_t>(r);
  }
  return HllSketch::from_registers(fam, std::move(regs), k);
}

PartSketches build_parts(const SweepConfig& c, const Instance& inst, std::uint64_t seed, std::size_t m) {
  const HashFamily fam(seed, m);
  const bool with_hll = needs_hll(c);
  if (c.engine == Engine::hashed) {
    PartSketches ps{MaxSketch(fam), MaxSketch(fam), MaxSketch(fam), {}, {}, {}};
    if (with_hll) {
      const HashFamily hfam(seed, hll_size_for(m));
      ps.h_both.emplace(hfam);
      ps.h_a_only.emplace(hfam);
      ps.h_b_only.emplace(hfam);
    }
    hashed_part(inst.both, ps.both, with_hll ? &*ps.h_both : nullptr);
    hashed_part(inst.a_only, ps.a_only, with_hll ? &*ps.h_a_only : nullptr);
    hashed_part(inst.b_only, ps.b_only, with_hll ? &*ps.h_b_only : nullptr);
    return ps;
  }
  std::mt19937_64 rng(seed);
  PartSketches ps{sampled_max(fam, inst.both.size(), rng), sampled_max(fam, inst.a_only.size(), rng),
                  sampled_max(fam, inst.b_only.size(), rng), {}, {}, {}};
  if (with_hll) {
    const HashFamily hfam(seed, hll_size_for(m));
    ps.h_both.emplace(sampled_hll(hfam, inst.both.size(), rng));
    ps.h_a_only.emplace(sampled_hll(hfam, inst.a_only.size(), rng));
    ps.h_b_only.emplace(sampled_hll(hfam, inst.b_only.size(), rng));
  }
  return ps;
}

}  // namespace

TrialOutcome run_trial(const SweepConfig& config, std::size_t f_index, std::size_t alpha_index,
                       std::size_t m_index, std::size_t trial) {
  const double f = config.f_values.at(f_index);
  const double alpha = config.alpha_values.at(alpha_index);
  const std::size_t m = config.m_values.at(m_index);
  const std::uint64_t stride = config.a + b_size_of(config.a, f);
  const Instance inst = generate_instance(config.a, f, alpha, stride * trial);
  const std::uint64_t seed = trial_seed(config.seed, f_index, alpha_index, m_index, trial);

  const PartSketches ps = build_parts(config, inst, seed, m);
  const MaxSketch sa = max_merge(ps.both, ps.a_only);
  const MaxSketch sb = max_merge(ps.both, ps.b_only);

  std::optional<HllSketch> ha, hb;
  if (ps.h_both) {
    ha.emplace(hll_merge(*ps.h_both, *ps.h_a_only));
    hb.emplace(hll_merge(*ps.h_both, *ps.h_b_only));
  }

  TrialOutcome out;
  out.rho_hat = jaccard_estimate(sa, sb);
  out.maxsketch_cards = {maxsketch_cardinality(sa).value, maxsketch_cardinality(sb).value,
                         maxsketch_cardinality(max_merge(sa, sb)).value};
  if (ha) {
    out.hll_cards = Cardinalities{hll_estimate(*ha).value, hll_estimate(*hb).value,
                                  hll_estimate(hll_merge(*ha, *hb)).value};
  }
  const Cardinalities& cards =
      config.cards == CardinalitySource::hll && out.hll_cards ? *out.hll_cards : out.maxsketch_cards;
  out.a_hat = cards.a;
  out.b_hat = cards.b;
  out.u_hat = cards.u;
  out.s1 = scheme1(out.a_hat, out.b_hat, out.u_hat);
  out.s2 = scheme2(out.rho_hat, out.u_hat);
  out.s3 = scheme3(out.rho_hat, out.a_hat, out.b_hat);
  if (config.has(Scheme::ml)) {
    MlConfig mc;
    mc.initializer = config.init;
    mc.max_iterations = config.ml_max_iterations;
    out.ml = ml_estimate(sa, sb, mc, ha ? &*ha : nullptr, hb ? &*hb : nullptr);
  }
  return out;
}

std::vector<TrialOutcome> run_point(const SweepConfig& config, std::size_t f_index, std::size_t alpha_index,
                                    std::size_t m_index) {
  std::vector<TrialOutcome> out(config.trials);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(config.trials, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < config.trials; t = next++) {
      out[t] = run_trial(config, f_index, alpha_index, m_index, t);
    }
  };
  if (workers == 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        work();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.trials;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

template <class F>
std::optional<double> defined(F&& fn) {
  try {
    const double v = fn();
    if (std::isfinite(v)) return v;
  } catch (const Error&) {
  }
  return std::nullopt;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<TrialOutcome>& outcomes, Scheme s) {
  double sum = 0.0;
  for (const auto& o : outcomes) sum += o.estimate(s);
  const double t = static_cast<double>(outcomes.size());
  Moments mo;
  mo.mean = sum / t;
  double ss = 0.0;
  for (const auto& o : outcomes) {
    const double d = o.estimate(s) - mo.mean;
    ss += d * d;
  }
  mo.var = ss / t;
  return mo;
}

}  // namespace

std::vector<SweepRow> aggregate_point(const SweepConfig& config, std::size_t f_index, std::size_t alpha_index,
                                      std::size_t m_index, const std::vector<TrialOutcome>& outcomes) {
  if (outcomes.empty()) throw ContractError("no outcomes to aggregate");
  const double f = config.f_values.at(f_index);
  const double alpha = config.alpha_values.at(alpha_index);
  const std::size_t m = config.m_values.at(m_index);
  const Instance inst = generate_instance(config.a, f, alpha);
  const double a = static_cast<double>(inst.a_size());
  const double b = static_cast<double>(inst.b_size());
  const double n = static_cast<double>(inst.n);
  const bool normalized = inst.n > 0;

  std::optional<double> cr;
  if (normalized) {
    const ProblemParams p(a, b, n);
    cr = defined([&] { return theory::cramer_rao_closed_form(p, m) / (n * n); });
  }
  auto theory_for = [&](Scheme s) -> std::optional<double> {
    if (!normalized) return std::nullopt;
    const ProblemParams p(a, b, n);
    switch (s) {
      case Scheme::s1: return defined([&] { return theory::var_scheme1_norm(p, m); });
      case Scheme::s2: return defined([&] { return theory::var_scheme2_norm(p, m); });
      case Scheme::s3: return defined([&] { return theory::var_scheme3_norm(p, m); });
      case Scheme::ml: return cr;
    }
    return std::nullopt;
  };

  std::optional<Moments> ml_moments;
  if (config.has(Scheme::ml)) ml_moments = moments(outcomes, Scheme::ml);

  std::vector<SweepRow> rows;
  for (Scheme s : config.schemes) {
    const Moments mo = s == Scheme::ml ? *ml_moments : moments(outcomes, s);
    SweepRow r;
    r.scheme = s;
    r.f = f;
    r.alpha = alpha;
    r.m = m;
    r.trials = outcomes.size();
    r.true_n = inst.n;
    r.mean_est = mo.mean;
    if (normalized) {
      r.bias_norm = std::abs(mo.mean / n - 1.0);
      r.var_norm = mo.var / (n * n);
    }
    r.theory_var_norm = theory_for(s);
    r.cr_var_norm = cr;
    if (s != Scheme::ml && ml_moments && mo.var > 0.0) {
      r.improvement_of_ml = (mo.var - ml_moments->var) / mo.var;
    }
    if (s == Scheme::ml) {
      r.fallback_count = static_cast<std::size_t>(
          std::count_if(outcomes.begin(), outcomes.end(), [](const TrialOutcome& o) { return o.ml && o.ml->fallback; }));
    }
    r.seed = config.seed;
    rows.push_back(r);
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const SweepConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::size_t total = config.f_values.size() * config.alpha_values.size() * config.m_values.size();
  std::size_t done = 0;
  std::vector<SweepRow> rows;
  for (std::size_t fi = 0; fi < config.f_values.size(); ++fi) {
    for (std::size_t ai = 0; ai < config.alpha_values.size(); ++ai) {
      for (std::size_t mi = 0; mi < config.m_values.size(); ++mi) {
        const auto outcomes = run_point(config, fi, ai, mi);
        auto point = aggregate_point(config, fi, ai, mi, outcomes);
        rows.insert(rows.end(), point.begin(), point.end());
        if (progress) progress(++done, total);
      }
    }
  }
  return rows;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

}  // namespace

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  std::vector<const SweepRow*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const SweepRow* x, const SweepRow* y) {
    return std::make_tuple(x->f, x->alpha, x->m, to_string(x->scheme)) <
           std::make_tuple(y->f, y->alpha, y->m, to_string(y->scheme));
  });
  out << kCsvHeader << '\n';
  for (const SweepRow* r : sorted) {
    out << to_string(r->scheme) << ',' << format_real(r->f) << ',' << format_real(r->alpha) << ',' << r->m << ','
        << r->trials << ',' << r->true_n << ',' << format_real(r->mean_est) << ',' << opt(r->bias_norm) << ','
        << opt(r->var_norm) << ',' << opt(r->theory_var_norm) << ',' << opt(r->cr_var_norm) << ','
        << opt(r->improvement_of_ml) << ',' << r->fallback_count << ',' << r->seed << '\n';
  }
}

void write_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) throw ContractError("no results to write");
  std::ostringstream buf;
  write_csv(rows, buf);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << buf.str();
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_num(std::string_view s, const char* field) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(std::string("bad value for ") + field + ": '" + std::string(s) + "'");
  }
  return v;
}

std::optional<double> parse_opt(std::string_view s, const char* field) {
  if (s.empty()) return std::nullopt;
  return parse_num<double>(s, field);
}

}  // namespace

std::vector<SweepRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw FormatError("unexpected CSV header: '" + line + "'");
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 14) throw FormatError("expected 14 fields, got " + std::to_string(cells.size()));
    SweepRow r;
    try {
      r.scheme = parse_scheme(cells[0]);
    } catch (const ContractError& e) {
      throw FormatError(e.what());
    }
    r.f = parse_num<double>(cells[1], "f");
    r.alpha = parse_num<double>(cells[2], "alpha");
    r.m = parse_num<std::size_t>(cells[3], "m");
    r.trials = parse_num<std::size_t>(cells[4], "trials");
    r.true_n = parse_num<std::uint64_t>(cells[5], "true_n");
    r.mean_est = parse_num<double>(cells[6], "mean_est");
    r.bias_norm = parse_opt(cells[7], "bias_norm");
    r.var_norm = parse_opt(cells[8], "var_norm");
    r.theory_var_norm = parse_opt(cells[9], "theory_var_norm");
    r.cr_var_norm = parse_opt(cells[10], "cr_var_norm");
    r.improvement_of_ml = parse_opt(cells[11], "improvement_of_ml");
    r.fallback_count = parse_num<std::size_t>(cells[12], "fallback_count");
    r.seed = parse_num<std::uint64_t>(cells[13], "seed");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace isect::sim
