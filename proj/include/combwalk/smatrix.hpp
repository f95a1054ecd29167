#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

#include "combwalk/comb.hpp"

namespace combwalk {

using cplx = std::complex<double>;

// Formal S-matrix at the endpoints theta = 0 and theta = pi, where no wave
// propagates along the teeth. Never computed, only exposed.
inline constexpr double kEndpointS = -1.0;

struct ScatterSet {
    double theta = 0.0;       // requested angle
    double theta_used = 0.0;  // angle actually solved (differs after a pole fallback)
    Eigen::MatrixXcd x_matrix, y_matrix;
    Eigen::MatrixXcd s_full;   // full N x N matrix, A = s_full B
    Eigen::MatrixXcd s_tooth;  // N_t x N_t unitary block
    Eigen::MatrixXcd c_block;  // N_h x N_t, tooth inputs to hole amplitudes
    std::vector<std::size_t> teeth, holes;
    double cond_x = 0.0;       // 1-norm condition number of X
};

struct ScatterResiduals {
    double unitarity = 0.0;      // max |S^dag S - I|
    double symmetry = 0.0;       // max |S - S^T|
    double block = 0.0;          // tooth<-hole block and hole<-hole block vs -I
    double xy_conjugate = 0.0;   // max |Y - conj(X)|
    double xy_difference = 0.0;  // max |X - Y + 2 i sin(theta) T|
    double inverse_conj = 0.0;   // max |s_full conj(s_full) - I|
    double c_consistency = 0.0;  // max |C - conj(C) S|
    double max() const;
};

// Diagonal of X: 1 + exp(-i theta) on teeth, 2 cos(theta) on holes.
std::vector<cplx> x_diagonal(const CombConfig& comb, double theta);

// Dense X and Y = conj(X); off-diagonal -1, corners for periodic combs.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> assemble_xy(const CombConfig& comb, double theta);

// s_full = -X^{-1} Y column by column with the banded solver. Near a pole
// of s_full (cond_x > 1e12) the angle is shifted by +-1e-7 and the better
// conditioned result kept; if both fail, SingularThetaError.
ScatterSet compute_smatrix(const CombConfig& comb, double theta);

ScatterResiduals smatrix_residuals(const ScatterSet& s);

struct UpsilonState {
    double theta = 0.0;
    std::size_t source_tooth = 0;
    std::vector<cplx> a_coeffs;  // outgoing amplitudes A_n for B = e_t
};

UpsilonState upsilon(const CombConfig& comb, double theta, std::size_t tooth);

// max |X A + Y e_t|
double upsilon_residual(const CombConfig& comb, const UpsilonState& u);

// Spine amplitude phi(n, 0) = A_n + delta_{n,t}, which is also the overlap
// <Phi_n | Upsilon_{theta,t}> = (s_full + 1)_{n,t}.
std::vector<cplx> upsilon_spine(const UpsilonState& u);

struct PhaseShifts {
    double theta = 0.0;
    std::vector<double> delta;        // phases in (-pi, pi]
    std::vector<cplx> eigenvalues;    // exp(i delta)
    Eigen::MatrixXd vectors;          // real orthonormal eigenvectors of S (columns)
    bool has_pi = false;              // delta = pi present (C_n = 0 branch)
    double max_bth_residual = 0.0;    // residual of the reduced spine equations
};

// S is unitary and symmetric, so its real and imaginary parts are commuting
// real symmetric matrices with a common real orthonormal eigenbasis.
PhaseShifts phase_shift_eigensystem(const CombConfig& comb, double theta);

// |sum_teeth |A|^2 - sum_teeth |B|^2|
double flux_check(const std::vector<cplx>& a, const std::vector<cplx>& b, const CombConfig& comb);

// Columns (s_full + 1) e_t = -2 i sin(theta) X^{-1} e_t for every tooth t,
// evaluated without the cancellation of s_full + 1 near theta = 0.
// out[k][n] pairs tooth index k (in order of position) with site n.
void overlap_columns(const CombConfig& comb, double theta, std::vector<std::vector<cplx>>& out);

}  // namespace combwalk
