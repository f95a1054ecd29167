#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "combwalk/comb.hpp"
#include "combwalk/tridiag.hpp"

namespace combwalk {

// One E > 4 eigenstate: psi(n, j) = C_n (-1)^j exp(-sigma j) on tooth n,
// psi(n, 0) = C_n on hole n, with E = 2 + 2 cosh(sigma).
struct BoundState {
    double sigma = 0.0;
    double energy = 0.0;
    std::vector<double> amplitudes;  // C_n, unit Euclidean norm on the spine
    double norm_sq = 0.0;            // tail-inclusive squared norm

    double tooth_weight() const;     // sum_j exp(-2 sigma j) = 1/(1 - exp(-2 sigma))
};

struct BoundSolveInfo {
    std::size_t formula_count = 0;
    std::size_t rejected_small_sigma = 0;  // roots with sigma < 1e-6, flagged
    std::vector<std::vector<std::size_t>> degenerate_clusters;
    double max_residual = 0.0;
};

inline constexpr double kSigmaReject = 1e-6;

double bound_energy(double sigma);

// H0 + W(sigma): diagonal 2 (+ 1 + exp(-sigma) on teeth), off-diagonal -1.
SpineOperator bound_operator(const CombConfig& comb, double sigma);

// Number of eigenvalues of H0 + W(sigma) below 2 + 2 cosh(sigma). It is
// non-decreasing in sigma and jumps by one at every bound-state root.
std::size_t bound_count_below(const CombConfig& comb, double sigma);

// All E > 4 states sorted by energy. When check_count is set, a disagreement
// with n_e_gt4_formula raises ConsistencyError carrying both counts.
std::vector<BoundState> solve_bound_states(const CombConfig& comb, BoundSolveInfo* info = nullptr,
                                           bool check_count = true);

// Tail-inclusive inner product of two (unnormalized) states.
double bound_inner(const CombConfig& comb, const BoundState& a, const BoundState& b);

// Max residual over sites of (H0 + W(sigma) - E) C.
double bound_residual(const CombConfig& comb, const BoundState& s);

// ceil(N_t / 2) <= count <= N_t, the lower end reduced by one on 2-hole
// chains and uniform cycles.
bool count_bounds_check(const CombConfig& comb, std::size_t count);

// Eigenvalues of the 2N x 2N companion matrix
//   [[ -Adj + diag(chi), -diag(1 - chi) ], [ I, 0 ]]
// whose real eigenvalues in (1, 3] are exp(sigma) of the bound states.
std::vector<std::complex<double>> m_matrix_spectrum(const CombConfig& comb);

}  // namespace combwalk
