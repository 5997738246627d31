// mksd: command-line front end. Exit codes: 0 success, 2 usage error,
// 3 data error, 4 numerical failure.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mksd/commands.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void add_common(CLI::App* app, mksd::RunSpec& s, std::string& manifold, std::string& method, double default_alpha) {
  s.test.alpha = default_alpha;
  app->add_option("--manifold", manifold, "circle, torus or so3")->capture_default_str();
  app->add_option("--model", s.model, "null model spec")->capture_default_str();
  app->add_option("--alt", s.alt, "data model spec used to simulate data when --input is absent");
  app->add_option("--kernel", s.kernel, "auto, median, vm:eta, pvm:eta1,eta2 or exptrace:eta")->capture_default_str();
  app->add_option("--order", s.test.order, "Stein kernel order 0, 1 or 2")->capture_default_str();
  app->add_option("--alpha", s.test.alpha, "significance level")->capture_default_str();
  app->add_option("--bootstrap", s.test.bootstrap, "null samples B")->capture_default_str();
  app->add_option("--method", method, "wild or spectrum")->capture_default_str();
  app->add_option("--seed", s.test.seed, "master seed")->capture_default_str();
  app->add_option("--input", s.input, "data file");
  app->add_option("--output", s.output, "output path (prefix for criticize)");
  app->add_option("--n", s.n, "sample size for simulated data")->capture_default_str();
  app->add_option("--reps", s.reps, "Monte Carlo repetitions")->capture_default_str();
  app->add_option("--sweep", s.sweep, "name:v1,v2,... with name kappa, n or b");
  app->add_option("--J", s.J, "number of test locations")->capture_default_str();
  app->add_flag("--dump-null", s.dump_null, "include the null samples in the output");
  app->add_flag("--degrees", s.ingest.degrees, "input angles are in degrees");
  app->add_option("--directions", s.ingest.directions, "input values are direction codes out of this many");
  app->add_option("--rotation-tol", s.ingest.rotation_tol, "accepted rotation defect of SO(3) rows")
      ->capture_default_str();
  app->add_option("--grid", s.grid, "quadrature nodes for efficiency")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel Stein discrepancy goodness-of-fit tests on the circle, torus and SO(3)"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    double alpha;
    mksd::RunSpec spec;
    std::string manifold = "so3";
    std::string method = "wild";
    CLI::App* app = nullptr;
  };
  Sub subs[] = {
      {"test", "goodness-of-fit test of data against a model", 0.01, {}},
      {"criticize", "optimize and test interpretable locations on the torus", 0.05, {}},
      {"power-sim", "Monte Carlo rejection rates over a parameter sweep", 0.01, {}},
      {"efficiency", "relative Bahadur efficiencies on the circle", 0.01, {}},
  };
  for (auto& s : subs) {
    s.spec.command = s.name;
    if (s.spec.command == "criticize") s.manifold = "torus";
    if (s.spec.command == "efficiency") s.manifold = "circle";
    s.app = app.add_subcommand(s.name, s.help);
    add_common(s.app, s.spec, s.manifold, s.method, s.alpha);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (auto& s : subs) {
      if (!s.app->parsed()) continue;
      s.spec.manifold = mksd::parse_manifold(s.manifold);
      if (s.method == "wild") {
        s.spec.test.method = mksd::NullMethod::WildBootstrap;
      } else if (s.method == "spectrum") {
        s.spec.test.method = mksd::NullMethod::Spectrum;
      } else {
        throw mksd::UsageError("unknown --method '" + s.method + "' (expected wild or spectrum)");
      }
      s.spec.test.validate();
      mksd::run_command(s.spec, std::cout);
    }
  } catch (const mksd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mksd::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const mksd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
