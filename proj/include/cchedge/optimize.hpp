#pragma once

// Derivative-free local minimization and quasi-random start points.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cchedge {

using Objective = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
    std::size_t max_iter = 2000;
    double size_tol = 1e-10;     // stop when the simplex characteristic size falls below
    std::vector<double> step;    // initial simplex step per coordinate; empty = 10% of |x0| (or 0.1)
};

struct OptimResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Nelder-Mead simplex. Non-finite objective values are treated as +huge so the
/// simplex retreats from them instead of failing. One-dimensional problems
/// bracket the minimum downhill from x0 and refine with Brent's method.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opts = {});

/// n points of the Sobol sequence mapped into the box [lo, hi].
std::vector<std::vector<double>> sobol_points(std::span<const double> lo, std::span<const double> hi,
                                              std::size_t n);

}  // namespace cchedge
