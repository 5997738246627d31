#pragma once

// The four CLI commands as library functions: test, criticize, power-sim and
// efficiency. Each writes one JSON object or a CSV table whose first line is a
// '#'-comment holding the RunSpec.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "mksd/criticism.hpp"
#include "mksd/efficiency.hpp"
#include "mksd/errors.hpp"
#include "mksd/gof.hpp"
#include "mksd/io.hpp"
#include "mksd/kernel.hpp"
#include "mksd/sampling.hpp"
#include "mksd/specs.hpp"

namespace mksd {

using json = nlohmann::ordered_json;

struct RunSpec {
  std::string command;
  ManifoldKind manifold = ManifoldKind::SO3Euler;
  std::string model = "uniform";
  std::string alt;  // data-generating model when no input file is given
  std::string kernel = "auto";
  TestConfig test{};
  std::string input;
  std::string output;
  std::size_t n = 100;
  std::size_t reps = 100;
  std::string sweep;
  std::size_t J = 10;
  bool dump_null = false;
  IngestOptions ingest{};
  int grid = kDefaultQuadratureGrid;
};

inline json to_json(const RunSpec& s) {
  json j;
  j["command"] = s.command;
  j["manifold"] = manifold_name(s.manifold);
  j["model"] = s.model;
  j["alt"] = s.alt;
  j["kernel"] = s.kernel;
  j["order"] = s.test.order;
  j["alpha"] = s.test.alpha;
  j["bootstrap"] = s.test.bootstrap;
  j["method"] = to_string(s.test.method);
  j["seed"] = s.test.seed;
  j["input"] = s.input;
  j["output"] = s.output;
  j["n"] = s.n;
  j["reps"] = s.reps;
  j["sweep"] = s.sweep;
  j["J"] = s.J;
  j["dump_null"] = s.dump_null;
  j["degrees"] = s.ingest.degrees;
  j["directions"] = s.ingest.directions;
  j["rotation_tol"] = s.ingest.rotation_tol;
  j["grid"] = s.grid;
  return j;
}

inline std::string csv_header(const RunSpec& s) { return "# run_spec: " + to_json(s).dump() + "\n"; }

struct Sweep {
  std::string name;
  std::vector<double> values;
};

/// "name:v1,v2,..."
inline Sweep parse_sweep(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw UsageError("malformed sweep '" + std::string(text) + "' (expected name:v1,v2,...)");
  Sweep s{std::string(text.substr(0, colon)), {}};
  const auto args = text.substr(colon + 1);
  if (args.empty()) throw EmptyGrid();
  s.values = detail::parse_numbers(text, args, static_cast<std::size_t>(std::count(args.begin(), args.end(), ',') + 1));
  return s;
}

// ---------------------------------------------------------------------------
// Data

struct Notes {
  std::vector<std::string> warnings;

  void warn(std::string w) {
    std::cerr << "warning: " << w << '\n';
    warnings.push_back(std::move(w));
  }
};

/// n draws from `model`, which must live on chart C.
template <Chart C>
std::vector<typename C::Point> simulate(const ModelVariant& model, RngStream& rng, std::size_t n, Notes& notes) {
  return std::visit(
      [&](const auto& m) -> std::vector<typename C::Point> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (!std::is_same_v<typename M::chart_type, C>) {
          throw UsageError("data model and null model live on different manifolds");
        } else if constexpr (std::is_same_v<M, FisherSO3>) {
          auto batch = sample_fisher_so3(rng, m.F, n);
          if (batch.low_acceptance()) {
            notes.warn("low rejection-sampler acceptance rate " + std::to_string(batch.acceptance_rate));
          }
          return std::move(batch.points);
        } else {
          return sample_from(m, rng, n);
        }
      },
      model);
}

template <Chart C>
std::vector<typename C::Point> load_data(const RunSpec& s, Notes& notes) {
  if (!s.input.empty()) return ingest_file<C>(s.input, s.ingest);
  if (!s.alt.empty()) {
    RngStream rng = RngStream(s.test.seed).derive(0x64617461ULL);
    return simulate<C>(parse_model(s.alt, s.manifold), rng, s.n, notes);
  }
  throw UsageError("either --input or --alt (simulated data) is required");
}

// ---------------------------------------------------------------------------
// test

struct TestOutcome {
  TestResult result;
  KernelSpec::Mode mode = KernelSpec::Mode::Auto;
  std::vector<std::vector<double>> grid;
  std::vector<double> selection_objective;
  std::size_t n_input = 0;
};

/// Kernel choice followed by the test. Auto: power-proxy selection on a
/// seeded half, test on the other half. Median and fixed: test on all data.
template <UnnormalizedDensity Q>
TestOutcome evaluate_test(std::span<const typename Q::chart_type::Point> data, const Q& q, const KernelSpec& ks,
                          const TestConfig& cfg) {
  using C = typename Q::chart_type;
  using Point = typename C::Point;
  cfg.validate();
  TestOutcome out;
  out.mode = ks.mode;
  out.n_input = data.size();
  RngStream ref_rng = RngStream(cfg.seed).derive(0x726566ULL);
  auto reference = [&](std::size_t m) {
    return cfg.order == 0 ? sample_from(q, ref_rng, m) : std::vector<Point>{};
  };
  if (ks.mode == KernelSpec::Mode::Auto) {
    if (data.size() < 4) throw TooFewSamples(data.size(), 4);
    const auto [train_idx, test_idx] = split_half(data.size(), cfg.seed);
    const auto train = gather(data, train_idx);
    out.grid = default_param_grid(median_heuristic<C>(std::span<const Point>(train), q.chart()));
    const auto ref_sel = reference(train_idx.size());
    const auto sel = select_kernel_params<Q>(data, q, cfg, out.grid, ref_sel);
    out.selection_objective = sel.objective;
    const auto test = gather(data, sel.test);
    out.result = run_test<Q>(test, q, ExpKernel<C>(q.chart(), sel.params), cfg, reference(test.size()));
    return out;
  }
  const auto params = ks.mode == KernelSpec::Mode::Median ? median_heuristic<C>(data, q.chart()) : ks.params;
  out.result = run_test<Q>(data, q, ExpKernel<C>(q.chart(), params), cfg, reference(data.size()));
  return out;
}

inline json to_json(const TestOutcome& o, bool dump_null) {
  const auto& r = o.result;
  json j;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["quantile"] = r.quantile;
  j["reject"] = r.reject;
  j["B"] = r.null_samples.size();
  j["alpha"] = r.alpha;
  j["order"] = r.order;
  j["method"] = to_string(r.method);
  j["kernel_params"] = r.kernel_params;
  j["kernel_mode"] = o.mode == KernelSpec::Mode::Auto ? "auto" : o.mode == KernelSpec::Mode::Median ? "median" : "fixed";
  j["u_statistic"] = r.u_statistic;
  j["v_statistic"] = r.v_statistic;
  j["n_input"] = o.n_input;
  j["n_test"] = r.n;
  if (!o.grid.empty()) {
    j["selection_grid"] = o.grid;
    j["selection_objective"] = o.selection_objective;
  }
  if (dump_null) j["null_samples"] = r.null_samples;
  return j;
}

inline void write_text(const RunSpec& s, std::ostream& fallback, const std::string& text) {
  if (s.output.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(s.output);
  if (!f) throw DataError("cannot open output file '" + s.output + "'");
  f << text;
}

/// Runs `f(q)` with the null model named by spec.model.
template <class F>
decltype(auto) with_model(const RunSpec& s, const std::string& spec, F&& f) {
  return std::visit(std::forward<F>(f), parse_model(spec, s.manifold));
}

inline json cmd_test_json(const RunSpec& s) {
  const KernelSpec ks = parse_kernel(s.kernel, s.manifold);
  return with_model(s, s.model, [&](const auto& q) {
    using Q = std::decay_t<decltype(q)>;
    using C = typename Q::chart_type;
    Notes notes;
    const auto data = load_data<C>(s, notes);
    json j;
    j["run_spec"] = to_json(s);
    j["seed"] = s.test.seed;
    j.update(to_json(evaluate_test<Q>(std::span<const typename C::Point>(data), q, ks, s.test), s.dump_null));
    if (!notes.warnings.empty()) j["warnings"] = notes.warnings;
    return j;
  });
}

inline void cmd_test(const RunSpec& s, std::ostream& out = std::cout) {
  write_text(s, out, cmd_test_json(s).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// power-sim

struct PowerRow {
  double parameter = 0.0;
  std::size_t rejections = 0;
  std::size_t reps = 0;
  double mean_p_value = 0.0;

  double rate() const { return static_cast<double>(rejections) / static_cast<double>(reps); }
  double stderr_() const { return std::sqrt(rate() * (1.0 - rate()) / static_cast<double>(reps)); }
};

/// Rejection rates over a kappa (exponential-trace data), n (data from --alt)
/// or b (F_b null, data from --alt, default F_0 = I) sweep.
inline std::vector<PowerRow> power_sim(const RunSpec& s, Notes& notes) {
  const Sweep sweep = parse_sweep(s.sweep);
  if (s.reps < 1) throw UsageError("--reps must be at least 1");
  const KernelSpec ks = parse_kernel(s.kernel, s.manifold);
  std::vector<PowerRow> rows;
  for (std::size_t gi = 0; gi < sweep.values.size(); ++gi) {
    const double v = sweep.values[gi];
    std::string null_spec = s.model, data_spec = s.alt;
    std::size_t n = s.n;
    if (sweep.name == "kappa") {
      if (!(v >= 0.0)) throw UsageError("kappa sweep values must be nonnegative");
      data_spec = "exptrace:" + std::to_string(v);
    } else if (sweep.name == "n") {
      if (!(v >= 4.0) || v != std::floor(v)) throw UsageError("n sweep values must be integers of at least 4");
      if (data_spec.empty()) throw UsageError("an n sweep needs the data model --alt");
      n = static_cast<std::size_t>(v);
    } else if (sweep.name == "b") {
      null_spec = "fisherb:" + std::to_string(v);
      if (data_spec.empty()) data_spec = "fisherb:0";
    } else {
      throw UsageError("unknown sweep '" + sweep.name + "' (expected kappa, n or b)");
    }
    // to_string rounds to 6 decimals; rebuild the exact values.
    ModelVariant data_model = parse_model(data_spec, s.manifold);
    if (sweep.name == "kappa") data_model = FisherSO3::exp_trace(v);
    ModelVariant null_model = parse_model(null_spec, s.manifold);
    if (sweep.name == "b") null_model = FisherSO3(fisher_perturbation(v));

    PowerRow row{v, 0, s.reps, 0.0};
    std::visit(
        [&](const auto& q) {
          using Q = std::decay_t<decltype(q)>;
          using C = typename Q::chart_type;
          for (std::size_t r = 0; r < s.reps; ++r) {
            const RngStream rep = RngStream(s.test.seed).derive({gi, r});
            RngStream data_rng = rep.derive(1);
            const auto data = simulate<C>(data_model, data_rng, n, notes);
            TestConfig cfg = s.test;
            cfg.seed = rep.derive(2).seed();
            const auto o = evaluate_test<Q>(std::span<const typename C::Point>(data), q, ks, cfg);
            row.rejections += o.result.reject ? 1 : 0;
            row.mean_p_value += o.result.p_value / static_cast<double>(s.reps);
          }
        },
        null_model);
    rows.push_back(row);
  }
  return rows;
}

inline void cmd_power_sim(const RunSpec& s, std::ostream& out = std::cout) {
  Notes notes;
  const auto rows = power_sim(s, notes);
  std::ostringstream csv;
  csv << csv_header(s);
  csv << "parameter,rejection_rate,mc_stderr,reps,mean_p_value\n";
  for (const auto& r : rows) {
    csv << format_double(r.parameter) << ',' << format_double(r.rate()) << ',' << format_double(r.stderr_()) << ','
        << r.reps << ',' << format_double(r.mean_p_value) << '\n';
  }
  write_text(s, out, csv.str());
}

// ---------------------------------------------------------------------------
// criticize

struct CriticizeOutput {
  json summary;
  std::string locations_csv, objectives_csv, grid_csv;
};

inline CriticizeOutput run_criticize(const RunSpec& s) {
  if (s.manifold != ManifoldKind::Torus2) throw UsageError("criticize needs --manifold torus");
  if (s.J < 1) throw UsageError("--J must be at least 1");
  const KernelSpec ks = parse_kernel(s.kernel, s.manifold);
  return with_model(s, s.model, [&](const auto& q) -> CriticizeOutput {
    using Q = std::decay_t<decltype(q)>;
    if constexpr (!std::is_same_v<typename Q::chart_type, Torus>) {
      throw UsageError("criticize needs a torus model");
    } else {
      Notes notes;
      const auto data = load_data<Torus>(s, notes);
      if (data.size() < 4) throw TooFewSamples(data.size(), 4);
      const auto [train_idx, test_idx] = split_half(data.size(), s.test.seed);
      const auto train = gather(std::span<const Torus::Point>(data), train_idx);
      const auto params = ks.mode == KernelSpec::Mode::Fixed
                              ? ks.params
                              : median_heuristic<Torus>(std::span<const Torus::Point>(train), q.chart());
      const ExpKernel<Torus> k(q.chart(), params);
      CriticismConfig cfg;
      cfg.J = s.J;
      cfg.bootstrap = s.test.bootstrap;
      cfg.alpha = s.test.alpha;
      cfg.seed = s.test.seed;
      const auto r = criticize<Q>(std::span<const Torus::Point>(data), q, k, cfg);

      CriticizeOutput out;
      json& j = out.summary;
      j["run_spec"] = to_json(s);
      j["statistic"] = r.statistic;
      j["p_value"] = r.p_value;
      j["quantile"] = r.quantile;
      j["reject"] = r.reject;
      j["B"] = r.null_samples.size();
      j["alpha"] = cfg.alpha;
      j["J"] = cfg.J;
      j["seed"] = s.test.seed;
      j["kernel_params"] = r.kernel_params;
      j["objective"] = r.objective;
      j["n_input"] = data.size();
      j["n_train"] = r.train.size();
      j["n_test"] = r.test.size();
      json locs = json::array();
      for (std::size_t i = 0; i < r.locations.J(); ++i) {
        locs.push_back({{"x1", r.locations.V[i](0)}, {"x2", r.locations.V[i](1)}, {"objective", r.location_objective[i]}});
      }
      j["locations"] = locs;
      if (s.dump_null) j["null_samples"] = r.null_samples;
      if (!notes.warnings.empty()) j["warnings"] = notes.warnings;

      std::ostringstream a, b, g;
      for (auto* os : {&a, &b, &g}) *os << csv_header(s);
      a << "index,x1,x2\n";
      b << "index,objective\n";
      for (std::size_t i = 0; i < r.locations.J(); ++i) {
        a << i << ',' << format_double(r.locations.V[i](0)) << ',' << format_double(r.locations.V[i](1)) << '\n';
        b << i << ',' << format_double(r.location_objective[i]) << '\n';
      }
      g << "x1,x2,objective\n";
      for (const auto& row : objective_lattice<Q>(std::span<const Torus::Point>(train), q, k, 32)) {
        g << format_double(row[0]) << ',' << format_double(row[1]) << ',' << format_double(row[2]) << '\n';
      }
      out.locations_csv = a.str();
      out.objectives_csv = b.str();
      out.grid_csv = g.str();
      return out;
    }
  });
}

/// Summary JSON to --output.json (or `out`); with --output the three CSVs go
/// to <output>_locations.csv, <output>_objectives.csv and <output>_grid.csv.
inline void cmd_criticize(const RunSpec& s, std::ostream& out = std::cout) {
  const auto r = run_criticize(s);
  if (s.output.empty()) {
    out << r.summary.dump(2) << '\n';
    return;
  }
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open output file '" + path + "'");
    f << text;
  };
  write(s.output + ".json", r.summary.dump(2) + "\n");
  write(s.output + "_locations.csv", r.locations_csv);
  write(s.output + "_objectives.csv", r.objectives_csv);
  write(s.output + "_grid.csv", r.grid_csv);
}

// ---------------------------------------------------------------------------
// efficiency

struct EfficiencyRow {
  double kappa = 0.0;
  SlopeResult slope[3];

  double e12() const { return slope[1].slope / slope[2].slope; }
  double e01() const { return slope[0].slope / slope[1].slope; }
  double denominator_ratio() const { return slope[2].denominator / slope[1].denominator; }
};

/// Slopes of all three orders for von Mises(κ, 0) alternatives on the circle.
template <UnnormalizedDensity Q>
  requires(Q::chart_type::kind == ManifoldKind::Circle)
std::vector<EfficiencyRow> efficiency_table(std::span<const double> kappas, const Q& q, const ExpKernel<Circle>& k,
                                            int grid_size = kDefaultQuadratureGrid) {
  if (kappas.empty()) throw EmptyGrid();
  if (grid_size < 256) throw UsageError("quadrature grid must have at least 256 nodes");
  std::vector<EfficiencyRow> rows(kappas.size());
  for (int c = 0; c < 3; ++c) {
    const CircleStein<Q> coarse(c, q, k, grid_size), fine(c, q, k, 2 * grid_size);
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      if (!(kappas[i] > 0.0)) throw UsageError("concentration values must be positive");
      const VonMises p{kappas[i], 0.0};
      rows[i].kappa = kappas[i];
      rows[i].slope[c] = fine.slope(p);
      check_resolved(coarse.slope(p).slope, rows[i].slope[c].slope, "Bahadur slope");
    }
  }
  return rows;
}

inline void cmd_efficiency(const RunSpec& s, std::ostream& out = std::cout) {
  if (s.manifold != ManifoldKind::Circle) throw UsageError("efficiency needs --manifold circle");
  std::vector<double> kappas = kappa_grid();
  if (!s.sweep.empty()) {
    const Sweep sw = parse_sweep(s.sweep);
    if (sw.name != "kappa") throw UsageError("efficiency sweeps kappa only");
    kappas = sw.values;
  }
  const KernelSpec ks = parse_kernel(s.kernel, s.manifold);
  const double eta = ks.mode == KernelSpec::Mode::Fixed ? ks.params[0] : 1.0;
  const auto rows = with_model(s, s.model, [&](const auto& q) -> std::vector<EfficiencyRow> {
    using Q = std::decay_t<decltype(q)>;
    if constexpr (Q::chart_type::kind != ManifoldKind::Circle) {
      throw UsageError("efficiency needs a circle model");
    } else {
      return efficiency_table<Q>(kappas, q, von_mises_kernel(eta), s.grid);
    }
  });
  std::ostringstream csv;
  csv << csv_header(s);
  csv << "kappa,E12,E01,slope0,slope1,slope2,denominator_ratio\n";
  for (const auto& r : rows) {
    for (double v : {r.kappa, r.e12(), r.e01(), r.slope[0].slope, r.slope[1].slope, r.slope[2].slope}) {
      csv << format_double(v) << ',';
    }
    csv << format_double(r.denominator_ratio()) << '\n';
  }
  write_text(s, out, csv.str());
}

inline void run_command(const RunSpec& s, std::ostream& out = std::cout) {
  if (s.command == "test") return cmd_test(s, out);
  if (s.command == "criticize") return cmd_criticize(s, out);
  if (s.command == "power-sim") return cmd_power_sim(s, out);
  if (s.command == "efficiency") return cmd_efficiency(s, out);
  throw UsageError("unknown command '" + s.command + "'");
}

}  // namespace mksd
