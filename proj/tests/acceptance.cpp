#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"

namespace {

struct Criterion {
  int number;
  std::string title;
  std::vector<std::string> configs;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "Chen residual of smooth and piecewise-linear lifts", {"c1_chen_lifts"}},
      {2, "scalar multiplicative sewing and dyadic order", {"c2_scalar_sewing"}},
      {3, "propagator vs RK4, cocycle and proximity", {"c3_dense_rk4", "c3_diagonal_properties"}},
      {4, "heat smoothing vs per-mode oracle", {"c4_heat_smoothing"}},
      {5, "Lie-Trotter and Strang orders", {"c5_splitting"}},
      {6, "rough integral identities", {"c6_ito_square", "c6_local_expansion"}},
      {7, "solver closed forms and refinement order",
       {"c7_scalar_closed_form", "c7_per_mode_closed_form", "c7_refinement_order"}},
      {8, "Ito consistency", {"c8_ito_closed_form", "c8_euler_maruyama"}},
      {9, "weak-mild equivalence", {"c9_weak_mild"}},
      {10, "stability", {"c10_stability"}},
      {11, "property suites", {"c11_properties"}},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace roughevo::cli;
  const std::filesystem::path dir = argc > 1 ? argv[1] : ROUGHEVO_CONFIG_DIR;
  bool all = true;
  for (const auto& c : criteria()) {
    bool pass = true;
    std::string notes;
    for (const auto& name : c.configs) {
      try {
        const auto config = load_config(dir / (name + ".json"));
        const RunResult r = run_experiment(config.at("experiment").get<std::string>(), config, {});
        for (const auto& check : r.checks) {
          char buf[256];
          std::snprintf(buf, sizeof buf, " %s=%.4g%s", check.name.c_str(), check.value, check.pass() ? "" : "(!)");
          notes += buf;
        }
        pass = pass && r.passed() && !r.checks.empty();
      } catch (const std::exception& e) {
        pass = false;
        notes += std::string(" ") + name + ": " + e.what();
      }
    }
    std::printf("criterion %2d %s: %s |%s\n", c.number, pass ? "PASS" : "FAIL", c.title.c_str(), notes.c_str());
    std::fflush(stdout);
    all = all && pass;
  }
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
