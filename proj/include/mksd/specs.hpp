#pragma once

// Model and kernel specification strings:
//   uniform | vm:kappa,mu | bvm:k1,k2,mu1,mu2,l12 | bvm:wind | bvm:wind-factorized
//   fisher:f11,...,f33 | fisher:vcg | fisherb:b | exptrace:kappa
//   auto | median | vm:eta | pvm:eta1,eta2 | exptrace:eta

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mksd/errors.hpp"
#include "mksd/io.hpp"
#include "mksd/manifold.hpp"
#include "mksd/model.hpp"

namespace mksd {

using ModelVariant =
    std::variant<Uniform<Circle>, VonMises, Uniform<Torus>, BivariateVonMises, Uniform<SO3Euler>, FisherSO3>;

inline ManifoldKind parse_manifold(std::string_view s) {
  if (s == "circle") return ManifoldKind::Circle;
  if (s == "torus") return ManifoldKind::Torus2;
  if (s == "so3") return ManifoldKind::SO3Euler;
  throw UsageError("unknown manifold '" + std::string(s) + "' (expected circle, torus or so3)");
}

inline std::string_view manifold_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Torus2: return "torus";
    case ManifoldKind::SO3Euler: return "so3";
  }
  return "?";
}

namespace detail {

struct SpecParts {
  std::string name;
  std::string args;  // text after ':', empty if none
  bool has_args = false;
};

inline SpecParts split_spec(std::string_view s) {
  SpecParts p;
  const auto colon = s.find(':');
  p.name = std::string(s.substr(0, colon));
  if (colon != std::string_view::npos) {
    p.has_args = true;
    p.args = std::string(s.substr(colon + 1));
  }
  return p;
}

inline std::vector<double> parse_numbers(std::string_view spec, std::string_view args, std::size_t expected) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= args.size()) {
    const auto comma = args.find(',', start);
    const auto field = args.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto v = parse_double(field);
    if (!v || !std::isfinite(*v)) {
      throw UsageError("malformed spec '" + std::string(spec) + "': '" + std::string(field) + "' is not a number");
    }
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.size() != expected) {
    throw UsageError("malformed spec '" + std::string(spec) + "': expected " + std::to_string(expected) +
                     " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

[[noreturn]] inline void wrong_manifold(std::string_view spec, ManifoldKind kind) {
  throw UsageError("spec '" + std::string(spec) + "' is not defined on manifold " + std::string(manifold_name(kind)));
}

}  // namespace detail

/// Parses a model specification for the given manifold.
inline ModelVariant parse_model(std::string_view spec, ManifoldKind kind) {
  const auto p = detail::split_spec(spec);
  auto nonneg = [&](double v) {
    if (v < 0.0) throw UsageError("malformed spec '" + std::string(spec) + "': concentrations must be nonnegative");
    return v;
  };
  if (p.name == "uniform" && !p.has_args) {
    switch (kind) {
      case ManifoldKind::Circle: return Uniform<Circle>{};
      case ManifoldKind::Torus2: return Uniform<Torus>{};
      case ManifoldKind::SO3Euler: return Uniform<SO3Euler>{};
    }
  }
  if (p.name == "vm" && p.has_args) {
    if (kind != ManifoldKind::Circle) detail::wrong_manifold(spec, kind);
    const auto v = detail::parse_numbers(spec, p.args, 2);
    return VonMises{nonneg(v[0]), v[1]};
  }
  if (p.name == "bvm" && p.has_args) {
    if (kind != ManifoldKind::Torus2) detail::wrong_manifold(spec, kind);
    if (p.args == "wind") return wind_direction_fit();
    if (p.args == "wind-factorized") return wind_direction_fit().factorized();
    const auto v = detail::parse_numbers(spec, p.args, 5);
    return BivariateVonMises{nonneg(v[0]), nonneg(v[1]), v[2], v[3], v[4]};
  }
  if ((p.name == "fisher" || p.name == "fisherb" || p.name == "exptrace") && p.has_args) {
    if (kind != ManifoldKind::SO3Euler) detail::wrong_manifold(spec, kind);
    if (p.name == "exptrace") return FisherSO3::exp_trace(nonneg(detail::parse_numbers(spec, p.args, 1)[0]));
    if (p.name == "fisherb") return FisherSO3(fisher_perturbation(detail::parse_numbers(spec, p.args, 1)[0]));
    if (p.args == "vcg") return FisherSO3(vectorcardiogram_fisher_fit());
    const auto v = detail::parse_numbers(spec, p.args, 9);
    return FisherSO3(Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data()));
  }
  throw UsageError("malformed model spec '" + std::string(spec) + "'");
}

struct KernelSpec {
  enum class Mode { Auto, Median, Fixed };
  Mode mode = Mode::Auto;
  std::vector<double> params;  // Fixed only
};

inline KernelSpec parse_kernel(std::string_view spec, ManifoldKind kind) {
  const auto p = detail::split_spec(spec);
  if (!p.has_args && p.name == "auto") return {KernelSpec::Mode::Auto, {}};
  if (!p.has_args && p.name == "median") return {KernelSpec::Mode::Median, {}};
  std::size_t count = 0;
  ManifoldKind want{};
  if (p.name == "vm") {
    count = 1;
    want = ManifoldKind::Circle;
  } else if (p.name == "pvm") {
    count = 2;
    want = ManifoldKind::Torus2;
  } else if (p.name == "exptrace") {
    count = 1;
    want = ManifoldKind::SO3Euler;
  } else {
    throw UsageError("malformed kernel spec '" + std::string(spec) + "'");
  }
  if (!p.has_args) throw UsageError("malformed kernel spec '" + std::string(spec) + "': missing parameters");
  if (kind != want) detail::wrong_manifold(spec, kind);
  KernelSpec k{KernelSpec::Mode::Fixed, detail::parse_numbers(spec, p.args, count)};
  for (double eta : k.params) {
    if (!(eta > 0.0)) throw UsageError("malformed kernel spec '" + std::string(spec) + "': parameters must be positive");
  }
  return k;
}

}  // namespace mksd
