#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace combwalk {

struct QuadratureResult {
    std::vector<double> value;
    double error = 0.0;  // sum over components of the Kronrod-Gauss differences
    std::size_t panels = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

// f(x, out) fills `out` (size dim) with the integrand at x.
using VectorIntegrand = std::function<void(double, std::vector<double>&)>;

// Globally adaptive 7/15-point Gauss-Kronrod on [a, b] for a vector
// integrand; the panel with the largest error is bisected until the summed
// error drops below abs_tol or max_panels is reached.
QuadratureResult integrate_adaptive(const VectorIntegrand& f, std::size_t dim, double a, double b,
                                    double abs_tol, std::size_t max_panels = 2000,
                                    std::size_t initial_panels = 1);

}  // namespace combwalk
