#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "config.hpp"
#include "roughevo/controlled.hpp"
#include "roughevo/propagator.hpp"
#include "roughevo/roughpath.hpp"
#include "roughevo/spectral_scale.hpp"

namespace roughevo::cli {

/// f(t) = sum_j poly_j t^j + sum a sin(w t + p) + sum a cos(w t + p) + sum a |t - c|^rho.
struct TimeFunction {
  struct Wave {
    double amplitude, frequency, phase;
  };
  struct Kink {
    double amplitude, center, exponent;
  };
  std::vector<double> poly;
  std::vector<Wave> sines;
  std::vector<Wave> cosines;
  std::vector<Kink> kinks;

  double operator()(double t) const;
  static TimeFunction constant(double c) { return TimeFunction{{c}, {}, {}, {}}; }
};

/// A number or {"poly": [...], "sin": [[a, w, p], ...], "cos": [...], "holder": [[a, c, rho], ...]}.
TimeFunction parse_function(const Node& node);

/// {"n": 1|2, "K": radius, "k0": base exponent} or {"flat": size}.
ScalePtr parse_scale(const Node& node);

/// {"start": 0, "end": 1, "level": L} (dyadic) or {"start", "end", "cells": N}.
Partition parse_grid(const Node& node);

/// Field t -> sum of modes: {"constant": f, "modes": [{"k": [..], "re": f, "im": f}],
/// "cos": [{"k": [..], "amplitude": f}], "sin": [...]} or {"file": csv}; f are time functions.
std::function<GalerkinVector(double)> parse_field(const Node& node, const ScalePtr& scale);
GalerkinVector parse_vector(const Node& node, const ScalePtr& scale);

/// Driver from {"kind": "smooth" | "piecewise_linear" | "brownian" | "fbm", ...}; stochastic kinds need a seed.
/// `refine` overrides the node's refinement factor.
RoughPath parse_driver(const Node& node, const Partition& grid, std::optional<std::uint64_t> seed,
                       std::optional<int> refine = std::nullopt);

/// Smooth driver components (for perturbations that add a smooth path to a smooth driver).
std::vector<TimeFunction> parse_components(const Node& node);

/// Operator family from {"kind": "heat" | "divergence" | "diagonal" | "dense" | "sum", ...}.
OperatorFamily parse_family(const Node& node, const ScalePtr& scale);

/// Nonlinearity from {"kind": "zero" | "multiplier" | "fractional" | "polynomial", ...}.
NonlinearityPtr parse_nonlinearity(const Node& node, const ScalePtr& scale);

/// Real matrix from nested arrays.
CMatrix parse_matrix(const Node& node);

}  // namespace roughevo::cli
