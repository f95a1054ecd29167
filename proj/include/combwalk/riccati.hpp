#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace combwalk {

enum class Family { egt4, upsilon, phase_shift, binary_chain };
std::string to_string(Family f);

inline constexpr std::size_t kBurnIn = 1000;
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RiccatiParams {
    double energy = kNaN;  // comb energy E, or the chain energy for binary_chain
    double theta = kNaN;
    double p = kNaN;
    double delta = kNaN;
    double v = kNaN;
};

struct RiccatiEstimate {
    double gamma_bar = 0.0;
    double eta_bar = kNaN;  // NaN for the complex recursion
    double stderr_gamma = 0.0;
    double stderr_eta = kNaN;
    double frac_negative = kNaN;  // raw fraction of psi < 0 in the recursion as written
    std::size_t n_iter = 0;       // total iterations including burn-in
    std::size_t burn_in = kBurnIn;
    std::uint64_t seed = 0;
    Family family = Family::binary_chain;
    RiccatiParams params;
    // Localization length, NaN unless gamma_bar > 0.
    double xi() const { return gamma_bar > 0.0 ? 1.0 / gamma_bar : kNaN; }
};

// Chain-model parameters (energy, potential strength) of H = -A + V T.
struct AndersonParams {
    double energy_chain = 0.0;
    double v_strength = 0.0;
};

// E > 4 states: chain energy 2 cosh(sigma), potential 1 + exp(-sigma).
AndersonParams anderson_from_egt4(double energy);
// Phase-shift states: chain energy E - 2, potential V(E, delta).
AndersonParams anderson_from_phase_shift(double energy, double delta);
// |E - (V - 1) - 1/(V - 1)|
double egt4_relation_residual(const AndersonParams& a);

// Effective tooth potential of an S eigenchannel with phase delta:
// E/2 + sqrt(E (1 - E/4)) tan(delta/2), 0 < E < 4.
double v_of_e_delta(double energy, double delta);
// Phase shift at which V vanishes: -theta with E = 2 - 2 cos(theta).
double delta_zero(double energy);

double sigma_of_energy(double energy);   // arcosh((E - 2)/2), E > 4
double theta_of_energy(double energy);   // arccos(1 - E/2), 0 < E < 4

// psi_{n+1} = -1/psi_n + (e^sigma - 1 | e^sigma + e^-sigma). eta_bar counts
// states in (4, E] per site: the fraction of psi < 0 at sigma = 0+ minus the
// fraction at sigma, both recursions driven by the same site sequence.
RiccatiEstimate lyapunov_egt4(double energy, double p, std::size_t n_iter, std::uint64_t seed);

// Complex recursion psi_{n+1} = d_n - 1/psi_n with d = 1 + exp(-i theta) on
// teeth and 2 cos(theta) on holes; gamma only.
RiccatiEstimate lyapunov_upsilon(double energy, double p, std::size_t n_iter, std::uint64_t seed);

// psi_{n+1} = -1/psi_n + V_n - E, V_n = V on teeth (probability 1 - p).
// eta_bar is the fraction of psi < 0, the IDOS of -A + V T.
RiccatiEstimate lyapunov_binary_chain(double energy_chain, double v, double p, std::size_t n_iter,
                                      std::uint64_t seed);

RiccatiEstimate lyapunov_phase_shift(double energy, double delta, double p, std::size_t n_iter,
                                     std::uint64_t seed);

// Renormalized transfer-matrix products; same site sequence as the Riccati
// engine for equal seeds.
RiccatiEstimate lyapunov_transfer(double energy_chain, double v, double p, std::size_t n_iter,
                                  std::uint64_t seed);

// Closed form for the regular comb (p = 0), 0 < E < 4: log |w_+| with
// w_+- = (1 + z +- sqrt((z + 3)(z - 1)))/2, z = exp(-i theta).
double gamma_upsilon_regular(double energy);

struct ThoulessResult {
    std::vector<double> energies;
    std::vector<double> gamma;       // Riccati
    std::vector<double> gamma_err;
    std::vector<double> thouless;    // integral of log|E - E'| d eta(E')
    std::vector<double> rel_dev;
    double max_rel_dev = 0.0;
    std::vector<double> grid, eta;   // the empirical IDOS
};

// Binary chain only. The IDOS is sampled on `grid_points` points covering
// the spectrum support with common random numbers; the Stieltjes integral
// is evaluated after integrating by parts.
ThoulessResult thouless_check(double p, double v, const std::vector<double>& energies,
                              std::size_t grid_points, std::size_t n_iter, std::uint64_t seed,
                              unsigned threads = 1);

struct MinLyapunov {
    double gamma_min = 0.0;
    double stderr_gamma = 0.0;
    double argmin_energy = 0.0;
    std::vector<double> energies, gamma, gamma_err;
};

MinLyapunov min_lyapunov_egt4(double p, const std::vector<double>& energies, std::size_t n_iter,
                              std::uint64_t seed, unsigned threads = 1);

// Evenly spaced energies in (4, 16/3]: 4 + k (4/3)/steps, k = 1..steps.
std::vector<double> egt4_grid(std::size_t steps);

struct ScalingFit {
    double prefactor = 0.0;
    double stderr_prefactor = 0.0;
    double target = 0.0;  // sqrt((1 - p)/2)
    double rel_dev = 0.0;
    std::vector<double> thetas, ratio, ratio_err;  // gamma / sqrt(theta)
};

// Weighted constant fit of gamma(theta)/sqrt(theta) for the Upsilon family.
ScalingFit small_e_scaling(double p, const std::vector<double>& thetas, std::size_t n_iter,
                           std::uint64_t seed, unsigned threads = 1);

struct KappaMoments {
    std::array<double, 2> mean{};
    std::array<std::array<double, 2>, 2> cov{};         // empirical, (Re, Im)
    std::array<std::array<double, 2>, 2> cov_exact{};   // Lyapunov-equation solution
    std::array<double, 2> mean_err{};
    double fixed_point_distance = 0.0;  // noiseless chi flow vs chi*_+ after relaxation
    std::size_t n_steps = 0;
    double dt = 0.0;
};

// Euler-Maruyama for d kappa = -i sqrt(p(1-p)) dW - 2 sqrt(1-p) e^{-i pi/4} kappa d tau.
KappaMoments simulate_kappa(double p, double dt, std::size_t n_steps, std::uint64_t seed);

}  // namespace combwalk
