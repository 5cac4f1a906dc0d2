#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "builders.hpp"
#include "config.hpp"
#include "experiments.hpp"

using namespace roughevo::cli;
using nlohmann::json;

TEST_CASE("unknown keys are errors with field paths") {
  const json j = {{"grid", {{"start", 0}, {"end", 1}, {"levl", 3}}}};
  const Node root(j, "config");
  try {
    parse_grid(root.at("grid"));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config.grid") != std::string::npos);
  }
}

TEST_CASE("time functions") {
  const json j = {{"poly", {1.0, 2.0}}, {"sin", {{0.5, 2.0}}}, {"holder", {{1.0, 0.5, 0.5}}}};
  const TimeFunction f = parse_function(Node(j, "f"));
  CHECK(f(0.25) == doctest::Approx(1.0 + 0.5 + 0.5 * std::sin(0.5) + 0.5));
  CHECK(parse_function(Node(json(3.0), "c"))(7.0) == 3.0);
}

TEST_CASE("fields from trigonometric modes are real") {
  const auto scale = roughevo::SpectralScale::torus(1, 3);
  const json j = {{"constant", 1.0}, {"cos", {{{"k", {1}}, {"amplitude", 2.0}}}}, {"sin", {{{"k", {2}}, {"amplitude", 1.0}}}}};
  const auto v = parse_vector(Node(j, "x"), scale);
  CHECK(conjugate_symmetry_defect(v) == 0.0);
  CHECK(std::abs(v.at({1, 0}) - 1.0) < 1e-15);
  CHECK(std::abs(v.at({2, 0}) - roughevo::Complex(0, -0.5)) < 1e-15);
  CHECK(std::abs(v.at({0, 0}) - 1.0) < 1e-15);
}

TEST_CASE("stochastic drivers need a seed") {
  const json j = {{"kind", "brownian"}};
  CHECK_THROWS_AS(parse_driver(Node(j, "driver"), roughevo::Partition::dyadic(0, 1, 3), std::nullopt), ConfigError);
  CHECK_NOTHROW(parse_driver(Node(j, "driver"), roughevo::Partition::dyadic(0, 1, 3), 5u));
}

TEST_CASE("splitting experiment reports orders near one and two") {
  const json cfg = {{"experiment", "splitting"},
                    {"a", {{0, 1}, {0, 0}}},
                    {"b", {{0, 0}, {1, 0}}},
                    {"steps", {8, 16, 32, 64}},
                    {"acceptance", {{"lie_order", {0.8, 1.2}}, {"strang_order", {1.8, 2.2}}}}};
  const RunResult r = run_experiment("splitting", cfg, {});
  CHECK(r.passed());
  CHECK(r.metrics.at("lie_n1_entry") == doctest::Approx(0.456919).epsilon(1e-6));
  CHECK(r.manifest.at("checks").size() == 2);
}

TEST_CASE("acceptance entries must name reported metrics") {
  const json cfg = {{"a", {{0, 1}, {0, 0}}}, {"b", {{0, 0}, {1, 0}}}, {"steps", {8, 16, 32}}, {"acceptance", {{"nope", 1.0}}}};
  CHECK_THROWS_AS(run_experiment("splitting", cfg, {}), ConfigError);
}

TEST_CASE("the subcriticality constraint is a config error") {
  const json cfg = {{"scale", {{"n", 1}, {"K", 2}}},
                    {"family", {{"kind", "heat"}, {"nu", 1.0}}},
                    {"diffusion", {{{"kind", "fractional"}, {"sigma", 0.5}}}},
                    {"initial", {{"constant", 1.0}}},
                    {"driver", {{"kind", "smooth"}, {"gamma", 0.45}, {"components", {{{"sin", {{1.0, 1.0}}}}}}}},
                    {"grid", {{"level", 4}}}};
  try {
    run_experiment("solve", cfg, {});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("subcriticality") != std::string::npos);
  }
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  const json cfg = {{"seed", 9},
                    {"grid", {{"level", 5}}},
                    {"paths", {{{"kind", "brownian"}, {"convention", "stratonovich"}}, {{"kind", "piecewise_linear"}}}}};
  const auto base = std::filesystem::temp_directory_path() / "roughevo_determinism";
  std::filesystem::remove_all(base);
  RunOptions a{base / "a", std::nullopt, false, false}, b{base / "b", std::nullopt, false, false};
  run_experiment("lift", cfg, a);
  run_experiment("lift", cfg, b);
  for (const char* file : {"manifest.json", "path_0.csv", "path_1.csv"}) {
    std::ifstream fa(a.out / file), fb(b.out / file);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
  }
  RunOptions c{base / "c", 10u, false, false};
  run_experiment("lift", cfg, c);
  std::ifstream fa(a.out / "path_0.csv"), fc(c.out / "path_0.csv");
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sc((std::istreambuf_iterator<char>(fc)), {});
  CHECK(sa != sc);
  std::filesystem::remove_all(base);
}
