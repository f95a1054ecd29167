#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "combwalk/comb.hpp"
#include "combwalk/tridiag.hpp"

namespace combwalk {

// Binary chain  (H phi)(n) = -phi(n-1) - phi(n+1) + V chi_n phi(n), in the
// shifted chain convention (chain energy = comb energy - 2).
struct ChainHamiltonian {
    CombConfig comb;
    double v_strength = 0.0;

    SpineOperator op() const;
    double scale() const;  // max(4, |V|+2), the spectral scale for tolerances
};

struct ChainSpectrum {
    std::vector<double> values;                // ascending
    std::vector<std::vector<double>> vectors;  // orthonormal, if requested
};

// Open chains: Sturm bisection plus inverse iteration. Periodic chains: the
// dense symmetric solver.
ChainSpectrum eigenvalues(const ChainHamiltonian& chain, bool want_vectors);

struct SpectralFlow {
    std::vector<double> v_grid;
    std::vector<std::vector<double>> levels;  // levels[g][alpha], sorted per grid point
    std::vector<std::vector<double>> slopes;  // slopes[g][alpha] on [v_g, v_{g+1}]
    std::vector<std::size_t> near_crossings;  // grid indices with gaps below 1e-9 * scale
};

SpectralFlow spectral_flow(const CombConfig& comb, const std::vector<double>& v_grid,
                           unsigned threads = 1);

// dE/dV = sum over teeth of |phi|^2 for the normalized eigenvector.
double de_dv_exact(const ChainHamiltonian& chain, std::size_t level);

// (N_t + N_t,odd)/2, lowered by one for 2-hole chains (periodic ones only
// when N = 0 mod 4). Uniform periodic combs use the exact cycle count.
std::size_t n_e_gt4_formula(const CombConfig& comb);

// Compactified coordinates (v, e) = (2 atan((V-E)/2), 2 atan(E/2)).
std::pair<double, double> penrose(double v_strength, double energy);

// Union of the free Dirichlet spectra of the hole strings, the V -> infinity
// limit of the low spectral component. Periodic all-hole combs give the cycle.
std::vector<double> hole_string_spectrum(const CombConfig& comb);

struct LemmaReport {
    std::size_t checks = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

// Spectral-flow consequences of the k-chain lemmas evaluated on a V grid;
// failures are collected, never thrown.
LemmaReport lemma_invariant_checks(const CombConfig& comb, const std::vector<double>& v_grid);

}  // namespace combwalk
