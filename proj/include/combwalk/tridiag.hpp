#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace combwalk {

// Real symmetric spine operator: arbitrary diagonal, constant off-diagonal,
// optional wrap-around coupling between the first and last site.
struct SpineOperator {
    std::vector<double> diag;
    double off = -1.0;
    bool periodic = false;

    std::size_t size() const { return diag.size(); }
};

// Gershgorin enclosure of the spectrum.
std::pair<double, double> gershgorin(const SpineOperator& op);

// Number of eigenvalues strictly below x, from the signs of the LDL^T pivots
// of op - x (Sylvester inertia). For the open case this is the classical
// Sturm-sequence count; periodic matrices use a bordered elimination.
std::size_t count_below(const SpineOperator& op, double x);

// Number of agreements in sign between consecutive members of the Sturm
// polynomial sequence p_0 = 1, p_k = det of the leading k x k block of
// op - x. Open operators only; equals size() - count_below(x).
std::size_t sturm_sign_agreements(const SpineOperator& op, double x);

// k-th smallest eigenvalue (0-based) by bisection on count_below.
double bisect_eigenvalue(const SpineOperator& op, std::size_t k, double lo, double hi,
                         double tol);

// All eigenvalues, ascending, by bisection.
std::vector<double> eigenvalues_bisect(const SpineOperator& op, double tol = 0.0);

// Unit eigenvector for the eigenvalue `lambda` by inverse iteration, kept
// orthogonal to `against` (used inside degenerate clusters). The sign is
// fixed by making the largest-magnitude component positive.
std::vector<double> inverse_iteration(const SpineOperator& op, double lambda,
                                      const std::vector<std::vector<double>>& against = {},
                                      unsigned start = 0);

struct EigenPairs {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Dense symmetric solve; used for periodic operators.
EigenPairs dense_eigensystem(const SpineOperator& op, bool want_vectors);

// max_i |(op v)_i - lambda v_i|
double residual_inf(const SpineOperator& op, double lambda, const std::vector<double>& v);

void apply(const SpineOperator& op, const std::vector<double>& v, std::vector<double>& out);

}  // namespace combwalk
