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

#include "isect/cli.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "isect/cardinality.hpp"
#include "isect/errors.hpp"
#include "isect/intersect.hpp"
#include "isect/simlab.hpp"
#include "isect/sketch.hpp"
#include "isect/sketch_io.hpp"
#include "isect/theory.hpp"

namespace isect::cli {
namespace {

using nlohmann::ordered_json;
using sim::format_real;

// Thrown for bad flag combinations detected after parsing.
struct UsageError : ContractError {
  using ContractError::ContractError;
};

double estimate_of(const AnySketch& s) {
  if (const auto* ms = std::get_if<MaxSketch>(&s)) {
    return ms->empty() ? 0.0 : maxsketch_cardinality(*ms).value;
  }
  return hll_estimate(std::get<HllSketch>(s)).value;
}

// ---- sketch -----------------------------------------------------------------

struct SketchArgs {
  std::string input = "-";
  std::string kind = "max";
  std::size_t m = 1024;
  std::uint64_t seed = 1;
  std::string out;
};

template <class S>
void ingest(std::istream& in, S& sketch) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) sketch.update(line);
  }
}

int do_sketch(const SketchArgs& a, std::istream& stdin_, std::ostream& out) {
  std::ifstream file;
  std::istream* in = &stdin_;
  if (a.input != "-") {
    file.open(a.input, std::ios::binary);
    if (!file) throw IoError("cannot read input '" + a.input + "'");
    in = &file;
  }
  const HashFamily fam(a.seed, a.m);
  std::optional<AnySketch> sketch;
  if (a.kind == "max") {
    MaxSketch s(fam);
    ingest(*in, s);
    sketch.emplace(std::move(s));
  } else {
    HllSketch s(fam);
    ingest(*in, s);
    sketch.emplace(std::move(s));
  }
  if (in->bad()) throw IoError("failed reading input '" + a.input + "'");
  write_sketch_file(a.out, *sketch);
  out << format_real(estimate_of(*sketch)) << '\n';
  return kOk;
}

// ---- merge ------------------------------------------------------------------

int do_merge(const std::vector<std::string>& inputs, const std::string& path, std::ostream& out) {
  std::optional<AnySketch> acc;
  std::string first;
  for (const auto& file : inputs) {
    AnySketch next = read_sketch_file(file);
    if (!acc) {
      acc.emplace(std::move(next));
      first = file;
      continue;
    }
    if (acc->index() != next.index()) {
      throw IncompatibleSketchError("'" + first + "' and '" + file + "' are different sketch kinds");
    }
    try {
      if (auto* ms = std::get_if<MaxSketch>(&*acc)) {
        *acc = max_merge(*ms, std::get<MaxSketch>(next));
      } else {
        *acc = hll_merge(std::get<HllSketch>(*acc), std::get<HllSketch>(next));
      }
    } catch (const IncompatibleSketchError& e) {
      throw IncompatibleSketchError("'" + first + "' vs '" + file + "': " + e.what());
    }
  }
  write_sketch_file(path, *acc);
  out << format_real(estimate_of(*acc)) << '\n';
  return kOk;
}

// ---- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string a, b, hll_a, hll_b;
  std::string scheme = "all";
  std::string init = "maxsketch";
  bool json = false;
};

int do_estimate(const EstimateArgs& args, std::ostream& out) {
  const AnySketch fa = read_sketch_file(args.a);
  const AnySketch fb = read_sketch_file(args.b);
  std::optional<HllSketch> ha, hb;
  if (!args.hll_a.empty() || !args.hll_b.empty()) {
    if (args.hll_a.empty() || args.hll_b.empty()) throw UsageError("--hll-a and --hll-b go together");
    auto xa = read_sketch_file(args.hll_a);
    auto xb = read_sketch_file(args.hll_b);
    if (!std::holds_alternative<HllSketch>(xa) || !std::holds_alternative<HllSketch>(xb)) {
      throw UsageError("--hll-a/--hll-b must be HyperLogLog sketches");
    }
    ha.emplace(std::get<HllSketch>(std::move(xa)));
    hb.emplace(std::get<HllSketch>(std::move(xb)));
  }
  if (fa.index() != fb.index()) {
    throw IncompatibleSketchError("'" + args.a + "' and '" + args.b + "' are different sketch kinds");
  }
  if (const auto* x = std::get_if<HllSketch>(&fa)) {
    if (ha) throw UsageError("--a/--b are already HyperLogLog sketches");
    ha.emplace(*x);
    hb.emplace(std::get<HllSketch>(fb));
  }

  const MaxSketch* sa = std::get_if<MaxSketch>(&fa);
  const MaxSketch* sb = std::get_if<MaxSketch>(&fb);
  const std::vector<std::string> all{"s1", "s2", "s3", "ml"};
  std::vector<std::string> schemes = args.scheme == "all" ? all : std::vector<std::string>{args.scheme};
  const bool needs_max = sa != nullptr || std::any_of(schemes.begin(), schemes.end(),
                                                      [](const std::string& s) { return s != "s1"; });
  if (needs_max && sa == nullptr) {
    if (args.scheme != "all") throw UsageError("scheme " + args.scheme + " needs max-sketches for --a/--b");
    schemes = {"s1"};
  }

  auto named = [&](auto&& fn) {
    try {
      return fn();
    } catch (const IncompatibleSketchError& e) {
      throw IncompatibleSketchError("'" + args.a + "' vs '" + args.b + "': " + e.what());
    }
  };

  ordered_json report;
  Cardinalities cards;
  named([&] {
    if (ha) {
      require_compatible(ha->family(), hb->family());
      cards = {hll_estimate(*ha).value, hll_estimate(*hb).value, hll_estimate(hll_merge(*ha, *hb)).value};
      report["cardinality_method"] = "hll";
    } else {
      cards = {maxsketch_cardinality(*sa).value, maxsketch_cardinality(*sb).value,
               maxsketch_cardinality(max_merge(*sa, *sb)).value};
      report["cardinality_method"] = "maxsketch";
    }
    return 0;
  });
  std::optional<double> rho;
  if (sa != nullptr) rho = named([&] { return jaccard_estimate(*sa, *sb); });

  if (rho) report["rho_hat"] = *rho;
  report["a_hat"] = cards.a;
  report["b_hat"] = cards.b;
  report["u_hat"] = cards.u;
  ordered_json est = ordered_json::object();
  for (const auto& s : schemes) {
    if (s == "s1") {
      est["s1"] = {{"n_hat", scheme1(cards.a, cards.b, cards.u)}};
    } else if (s == "s2") {
      est["s2"] = {{"n_hat", scheme2(*rho, cards.u)}};
    } else if (s == "s3") {
      est["s3"] = {{"n_hat", scheme3(*rho, cards.a, cards.b)}};
    } else {
      MlConfig mc;
      mc.initializer = args.init == "hll" ? MlInitializer::hll : MlInitializer::maxsketch;
      const MlReport r = named([&] { return ml_estimate(*sa, *sb, mc, ha ? &*ha : nullptr, hb ? &*hb : nullptr); });
      ordered_json j;
      j["n_hat"] = r.n_hat;
      j["a_hat"] = r.a_hat;
      j["b_hat"] = r.b_hat;
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      j["fallback"] = r.fallback ? ordered_json(std::string(to_string(*r.fallback))) : ordered_json(nullptr);
      j["initializer"] = std::string(to_string(mc.initializer));
      est["ml"] = j;
    }
  }
  report["estimates"] = est;

  if (args.json) {
    out << report.dump(2) << '\n';
    return kOk;
  }
  auto line = [&](const std::string& key, const std::string& value) {
    out << std::left << std::setw(20) << key << value << '\n';
  };
  line("cardinality_method", report["cardinality_method"].get<std::string>());
  if (rho) line("rho_hat", format_real(*rho));
  line("a_hat", format_real(cards.a));
  line("b_hat", format_real(cards.b));
  line("u_hat", format_real(cards.u));
  for (const auto& [name, j] : est.items()) {
    line(name + ".n_hat", format_real(j["n_hat"].get<double>()));
    if (name == "ml") {
      line("ml.a_hat", format_real(j["a_hat"].get<double>()));
      line("ml.b_hat", format_real(j["b_hat"].get<double>()));
      line("ml.iterations", std::to_string(j["iterations"].get<int>()));
      line("ml.converged", j["converged"].get<bool>() ? "true" : "false");
      line("ml.fallback", j["fallback"].is_null() ? "none" : j["fallback"].get<std::string>());
      line("ml.initializer", j["initializer"].get<std::string>());
    }
  }
  return kOk;
}

// ---- theory -----------------------------------------------------------------

struct TheoryArgs {
  double a = 0, b = 0, n = 0;
  std::size_t m = 0;
  bool csv = false;
};

int do_theory(const TheoryArgs& args, std::ostream& out) {
  const ProblemParams p(args.a, args.b, args.n);
  const theory::TheoryReport r = theory::theory_report(p, args.m);
  if (args.csv) {
    std::vector<sim::SweepRow> rows;
    const std::pair<sim::Scheme, double> vals[] = {{sim::Scheme::s1, r.var_scheme1_norm},
                                                   {sim::Scheme::s2, r.var_scheme2_norm},
                                                   {sim::Scheme::s3, r.var_scheme3_norm},
                                                   {sim::Scheme::ml, r.cr_var_norm}};
    for (const auto& [s, v] : vals) {
      sim::SweepRow row;
      row.scheme = s;
      row.f = p.b() / p.a();
      row.alpha = p.n() / p.a();
      row.m = args.m;
      row.trials = 0;
      row.true_n = static_cast<std::uint64_t>(std::llround(p.n()));
      row.mean_est = p.n();
      row.theory_var_norm = v;
      row.cr_var_norm = r.cr_var_norm;
      rows.push_back(row);
    }
    sim::write_csv(rows, out);
    return kOk;
  }
  auto line = [&](const std::string& key, const std::string& value) {
    out << std::left << std::setw(20) << key << value << '\n';
  };
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("undefined"); };
  line("a", format_real(p.a()));
  line("b", format_real(p.b()));
  line("n", format_real(p.n()));
  line("m", std::to_string(r.m));
  line("boundary", r.boundary ? "true" : "false");
  line("z_value", format_real(r.z_value));
  line("cr_var_n", format_real(r.cr_var_n));
  line("cr_var_norm", format_real(r.cr_var_norm));
  line("var_scheme1_norm", format_real(r.var_scheme1_norm));
  line("var_scheme2_norm", format_real(r.var_scheme2_norm));
  line("var_scheme3_norm", format_real(r.var_scheme3_norm));
  line("cov_ab", format_real(r.cov_ab));
  line("cov_au", opt(r.cov_au));
  line("cov_bu", opt(r.cov_bu));
  line("cov_an", opt(r.cov_an));
  if (r.fisher) {
    const char* names[] = {"fisher.a", "fisher.b", "fisher.n"};
    for (int i = 0; i < 3; ++i) {
      line(names[i], format_real((*r.fisher)(i, 0)) + " " + format_real((*r.fisher)(i, 1)) + " " +
                         format_real((*r.fisher)(i, 2)));
    }
  } else {
    line("fisher", "undefined");
  }
  return kOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  sim::SweepConfig config;
  std::vector<std::string> schemes;
  std::string init = "maxsketch";
  std::string cards = "hll";
  std::string engine = "hashed";
  bool paper_scale = false;
  std::string out = "results.csv";
  bool quiet = false;
};

// Rough cost model of the hashed engine: ~0.2 ns per element and slot on one core.
double estimated_seconds(const sim::SweepConfig& c) {
  double work = 0.0;
  for (double f : c.f_values) {
    for (double al : c.alpha_values) {
      const double a = static_cast<double>(c.a);
      const double elements = a + std::round(f * a) - std::round(al * a);
      for (std::size_t m : c.m_values) work += elements * static_cast<double>(m);
    }
  }
  const double per_element_slot = c.engine == sim::Engine::hashed ? 2e-10 : 0.0;
  const double per_trial = c.engine == sim::Engine::hashed ? 0.0 : 1e-4;
  const double points = static_cast<double>(c.f_values.size() * c.alpha_values.size() * c.m_values.size());
  return static_cast<double>(c.trials) * (work * per_element_slot + points * per_trial) /
         std::max(1u, c.workers);
}

int do_simulate(SimulateArgs args, std::ostream& out, std::ostream& err) {
  sim::SweepConfig& c = args.config;
  if (!args.schemes.empty()) {
    c.schemes.clear();
    for (const auto& s : args.schemes) c.schemes.push_back(sim::parse_scheme(s));
  }
  c.init = args.init == "hll" ? MlInitializer::hll : MlInitializer::maxsketch;
  c.cards = args.cards == "maxsketch" ? sim::CardinalitySource::maxsketch : sim::CardinalitySource::hll;
  c.engine = args.engine == "sampled" ? sim::Engine::sampled : sim::Engine::hashed;
  c.validate();
  if (args.paper_scale) {
    const double hours = estimated_seconds(c) / 3600.0;
    err << "warning: paper-scale sweep, estimated duration " << format_real(hours) << " h on " << c.workers
        << " worker(s)\n";
  }
  const auto progress = [&](std::size_t done, std::size_t total) {
    if (!args.quiet) err << "grid point " << done << "/" << total << '\n';
  };
  const auto rows = sim::run_sweep(c, progress);
  if (args.out == "-") {
    sim::write_csv(rows, out);
  } else {
    sim::write_csv(rows, args.out);
  }
  return kOk;
}

int classify(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const IncompatibleSketchError*>(&e)) return kIncompatible;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  return kValidation;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sketch-based set intersection size estimation"};
  app.name("isect");
  app.require_subcommand(1);

  SketchArgs sk;
  auto* sketch = app.add_subcommand("sketch", "Sketch newline-delimited tokens");
  sketch->add_option("--input", sk.input, "Input file, '-' for standard input")->capture_default_str();
  sketch->add_option("--kind", sk.kind, "Sketch kind")->check(CLI::IsMember({"max", "hll"}))->capture_default_str();
  sketch->add_option("--m", sk.m, "Number of slots / registers")->check(CLI::PositiveNumber)->capture_default_str();
  sketch->add_option("--seed", sk.seed, "64-bit hash seed")->capture_default_str();
  sketch->add_option("--out", sk.out, "Output sketch file")->required();

  std::vector<std::string> merge_inputs;
  std::string merge_out;
  auto* merge = app.add_subcommand("merge", "Merge sketches of the same kind (union)");
  merge->add_option("inputs", merge_inputs, "Sketch files")->required()->expected(1, -1);
  merge->add_option("--out", merge_out, "Output sketch file")->required();

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate |A ∩ B| from two sketches");
  estimate->add_option("--a", ea.a, "Sketch of A")->required();
  estimate->add_option("--b", ea.b, "Sketch of B")->required();
  estimate->add_option("--hll-a", ea.hll_a, "HyperLogLog sketch of A (cardinalities, hll init)");
  estimate->add_option("--hll-b", ea.hll_b, "HyperLogLog sketch of B");
  estimate->add_option("--scheme", ea.scheme)->check(CLI::IsMember({"s1", "s2", "s3", "ml", "all"}))->capture_default_str();
  estimate->add_option("--init", ea.init)->check(CLI::IsMember({"maxsketch", "hll"}))->capture_default_str();
  estimate->add_flag("--json", ea.json, "Machine-readable output");

  TheoryArgs ta;
  auto* theory = app.add_subcommand("theory", "Closed-form variances at (a, b, n, m)");
  theory->add_option("--a", ta.a)->required();
  theory->add_option("--b", ta.b)->required();
  theory->add_option("--n", ta.n)->required();
  theory->add_option("--m", ta.m)->required()->check(CLI::PositiveNumber);
  theory->add_flag("--csv", ta.csv, "Rows in the simulation CSV schema");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo sweep over (f, alpha, m)");
  simulate->add_flag("--paper-scale", sa.paper_scale, "a=1e6, 1e4 trials, alpha step 0.01, m in {100,500,1000,10000}");
  simulate->add_option("--a", sa.config.a)->capture_default_str();
  simulate->add_option("--f", sa.config.f_values)->delimiter(',');
  simulate->add_option("--alpha", sa.config.alpha_values)->delimiter(',');
  simulate->add_option("--m", sa.config.m_values)->delimiter(',');
  simulate->add_option("--trials", sa.config.trials)->capture_default_str();
  simulate->add_option("--seed", sa.config.seed)->capture_default_str();
  simulate->add_option("--schemes", sa.schemes)->delimiter(',')->check(CLI::IsMember({"s1", "s2", "s3", "ml"}));
  simulate->add_option("--init", sa.init)->check(CLI::IsMember({"maxsketch", "hll"}))->capture_default_str();
  simulate->add_option("--cards", sa.cards, "Cardinalities for s1-s3")
      ->check(CLI::IsMember({"hll", "maxsketch"}))
      ->capture_default_str();
  simulate->add_option("--engine", sa.engine)->check(CLI::IsMember({"hashed", "sampled"}))->capture_default_str();
  simulate->add_option("--workers", sa.config.workers)->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--out", sa.out, "Output CSV, '-' for standard output")->capture_default_str();
  simulate->add_flag("--quiet", sa.quiet, "No progress lines");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    // --paper-scale only replaces defaults; explicit flags still win.
    if (std::find(args.begin(), args.end(), "--paper-scale") != args.end()) sa.config = sim::paper_scale_config();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*sketch) return do_sketch(sk, in, out);
    if (*merge) return do_merge(merge_inputs, merge_out, out);
    if (*estimate) return do_estimate(ea, out);
    if (*theory) return do_theory(ta, out);
    if (*simulate) return do_simulate(sa, out, err);
  } catch (const Error& e) {
    return classify(e, err);
  }
  return kValidation;
}

}  // namespace isect::cli
