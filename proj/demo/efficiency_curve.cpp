// Relative Bahadur efficiencies of the three test orders for von Mises
// alternatives against the uniform circle.

#include <cstdio>

#include "mksd/commands.hpp"

int main() {
  using namespace mksd;
  const std::vector<double> kappas{0.5, 1, 2, 5, 10, 20};
  const auto rows = efficiency_table<Uniform<Circle>>(kappas, Uniform<Circle>{}, von_mises_kernel(1.0));
  std::printf("%6s %8s %8s\n", "kappa", "E12", "E01");
  for (const auto& r : rows) std::printf("%6.1f %8.4f %8.4f\n", r.kappa, r.e12(), r.e01());
}
