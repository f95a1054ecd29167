#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "combwalk/boundstates.hpp"
#include "combwalk/comb.hpp"

namespace combwalk {

// Exact regular-comb value 1/2 - 2/(3 pi) + sqrt(3)/(9 pi) log(2 + sqrt(3)).
double p_loc_regular();

// Upper bound on the ensemble mean, (1 - p)/(2 - p).
double p_loc_bound(double p);

double p_loc(const CombConfig& comb, const std::vector<BoundState>& states, std::size_t n0);
double p_loc(const CombConfig& comb, std::size_t n0);
// P^loc for every start site at once.
std::vector<double> p_loc_all(const CombConfig& comb, const std::vector<BoundState>& states);

// Time-averaged profile n -> P^loc(n0, n). Levels closer than cluster_tol in
// sigma are summed coherently, which is the diagonal form in a basis where
// the projectors are diagonal inside the level.
std::vector<double> p_loc_profile(const CombConfig& comb, const std::vector<BoundState>& states,
                                  std::size_t n0, double cluster_tol = 1e-9);

inline constexpr std::size_t kWholeTooth = static_cast<std::size_t>(-1);

// Same as above with the tooth sum cut after j = window (inclusive); window 0
// keeps the spine site only.
std::vector<double> p_loc_profile_window(const CombConfig& comb,
                                         const std::vector<BoundState>& states, std::size_t n0,
                                         std::size_t window, double cluster_tol = 1e-9);

// Double-sum envelope Q(n0, n) bounding P^loc(n0, n; T) for every T.
std::vector<double> q_envelope(const CombConfig& comb, const std::vector<BoundState>& states,
                               std::size_t n0);

struct QuadratureSpec {
    double abs_tol = 1e-7;        // on the summed escape probability
    double split = 0.1;           // sqrt substitution on (0, split]
    std::size_t max_panels = 4000;
};

struct EscapeResult {
    std::vector<std::size_t> teeth;
    std::vector<double> p_esc;  // aligned with teeth
    double achieved_error = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    double total() const;
};

// p_esc(n0, t) = int_0^pi dtheta/(2 pi) |(S_full + 1)_{n0,t}|^2 for every
// tooth t, using (S_full + 1)_{n0,t} = -2 i sin(theta) (X^{-1})_{t,n0}.
EscapeResult p_esc_all_teeth(const CombConfig& comb, std::size_t n0, const QuadratureSpec& q = {});
double p_esc_tooth(const CombConfig& comb, std::size_t n0, std::size_t tooth,
                   const QuadratureSpec& q = {});

struct DiffusionReport {
    std::size_t start_site = 0;
    double p_loc = 0.0;
    std::map<std::size_t, double> p_esc_by_tooth;
    double completeness_residual = 0.0;  // p_loc + sum p_esc - 1
    double quadrature_error = 0.0;
    std::vector<double> profile;
    double profile_sum_residual = 0.0;   // sum(profile) - p_loc
};

DiffusionReport diffusion_report(const CombConfig& comb, std::size_t n0, const QuadratureSpec& q = {});

struct EnsemblePloc {
    double p = 0.0;
    std::size_t length = 0, n_samples = 0;
    double mean = 0.0, stderr_mean = 0.0;
    std::vector<std::size_t> histogram, hist_tooth, hist_hole;  // 100 bins on [0, 1]
    double tooth_min = 1.0, tooth_max = 0.0, hole_min = 1.0, hole_max = 0.0;
    bool gap = false;          // one start class lies entirely above the other
    double gap_low = 0.0, gap_high = 0.0;
};

// Periodic combs; every site of every comb is a start site.
EnsemblePloc ensemble_ploc(double p, std::size_t length, std::size_t n_samples, std::uint64_t seed,
                           unsigned threads = 1);

struct EscapeFit {
    std::vector<std::size_t> distances;
    std::vector<double> mean_p_esc, stderr_p_esc;
    double exponent = 0.0, exponent_err = 0.0;
    double coefficient = 0.0, coefficient_err = 0.0;
    double target_coefficient = 0.0;  // 6/(1 - p)^3
    double cov = 0.0;                 // covariance of (log coefficient, exponent)
};

// Ensemble mean of p_esc(n0, n0 +- d) over tooth targets on periodic combs
// of length L, followed by a log-log least-squares fit.
EscapeFit escape_asymptotics(double p, std::size_t length, const std::vector<std::size_t>& distances,
                             std::size_t n_samples, std::uint64_t seed, std::size_t starts_per_comb,
                             unsigned threads = 1, double abs_tol = 1e-12);

struct OracleOptions {
    double total_time = 500.0;
    std::size_t tooth_length = 0;  // 0 selects 4 T + 100
    double sample_dt = 0.5;
    std::size_t window = 1;        // tooth sites j >= 1 counted with the spine site, or kWholeTooth
    double average_from = 0.0;     // time averages use [average_from, T]
    bool hann = true;              // sin^2 taper over the averaging interval, else uniform
    bool keep_snapshots = false;
    bool dump_full = false;        // snapshots also carry |psi|^2 on every site
};

struct OracleSnapshot {
    double time = 0.0;
    std::vector<double> site_prob;  // windowed probability per spine site
    // with dump_full: spine sites first, then tooth sites j = 1..J of each
    // tooth in spine order
    std::vector<double> full_prob;
};

struct OracleResult {
    std::vector<double> times;
    std::vector<double> norm_drift;     // |norm^2 - 1| per sample
    std::vector<double> energy_drift;   // relative change of <H>
    std::vector<double> time_average;   // per spine site
    std::vector<OracleSnapshot> snapshots;
    double max_norm_drift = 0.0;
    double max_energy_drift = 0.0;
    double trusted_until = 0.0;         // wavefront reached the tooth ends after this time
    bool boundary_reached = false;
    std::size_t tooth_length = 0;
};

// Chebyshev propagation of exp(-i t H) on the comb with teeth cut at
// tooth_length sites (Dirichlet ends), starting from |n0, 0>.
OracleResult evolve_oracle(const CombConfig& comb, std::size_t n0, const OracleOptions& opt);

// Probability of the bound component on tooth/hole n at time t,
// sum over sigma, sigma' of exp(i t (E - E')) <n0|G><G|P_n|G'><G'|n0>.
std::vector<double> p_loc_at_time(const CombConfig& comb, const std::vector<BoundState>& states,
                                  std::size_t n0, double t);

}  // namespace combwalk
