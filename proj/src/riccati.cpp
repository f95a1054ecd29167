#include "combwalk/riccati.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "combwalk/parallel.hpp"
#include "combwalk/rng.hpp"
#include "combwalk/stats.hpp"

namespace combwalk {

namespace {

constexpr double kTiny = 1e-300;

void check_iters(std::size_t n_iter) {
    if (n_iter < kBurnIn + 1000)
        throw std::invalid_argument("n_iter must be at least burn-in + 1000");
}

void check_finite(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite recursion parameter");
}

inline double guard(double psi) { return psi == 0.0 ? std::copysign(kTiny, psi) : psi; }

inline std::complex<double> guard(std::complex<double> psi) {
    return psi == std::complex<double>(0.0, 0.0) ? std::complex<double>(kTiny, 0.0) : psi;
}

// One Bernoulli draw per site: true means hole.
inline bool draw_hole(Engine& eng, double p) { return uniform01(eng) < p; }

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::egt4: return "egt4";
        case Family::upsilon: return "upsilon";
        case Family::phase_shift: return "phase_shift";
        case Family::binary_chain: return "binary_chain";
    }
    return "?";
}

double sigma_of_energy(double energy) {
    if (!(energy > 4.0)) throw std::invalid_argument("E > 4 required");
    return std::acosh((energy - 2.0) / 2.0);
}

double theta_of_energy(double energy) {
    if (!(energy > 0.0 && energy < 4.0)) throw std::invalid_argument("0 < E < 4 required");
    return std::acos(1.0 - energy / 2.0);
}

AndersonParams anderson_from_egt4(double energy) {
    double s = sigma_of_energy(energy);
    return {2.0 * std::cosh(s), 1.0 + std::exp(-s)};
}

AndersonParams anderson_from_phase_shift(double energy, double delta) {
    return {energy - 2.0, v_of_e_delta(energy, delta)};
}

double egt4_relation_residual(const AndersonParams& a) {
    double w = a.v_strength - 1.0;
    return std::abs(a.energy_chain - w - 1.0 / w);
}

double v_of_e_delta(double energy, double delta) {
    if (!(energy > 0.0 && energy < 4.0)) throw std::invalid_argument("v_of_e_delta: 0 < E < 4 required");
    if (!(delta > -std::numbers::pi && delta < std::numbers::pi))
        throw std::domain_error("v_of_e_delta: delta = +-pi is the pole of tan(delta/2)");
    return energy / 2.0 + std::sqrt(energy * (1.0 - energy / 4.0)) * std::tan(delta / 2.0);
}

double delta_zero(double energy) { return -theta_of_energy(energy); }

RiccatiEstimate lyapunov_egt4(double energy, double p, std::size_t n_iter, std::uint64_t seed) {
    check_iters(n_iter);
    const double s = sigma_of_energy(energy);
    const double a_tooth = std::exp(s) - 1.0, a_hole = 2.0 * std::cosh(s);
    const std::size_t n = n_iter - kBurnIn;
    Engine eng = make_engine(seed);
    double psi = 1.0, psi0 = 1.0;
    BatchMeans g(n), e(n), f(n);
    for (std::size_t i = 0; i < n_iter; ++i) {
        bool hole = draw_hole(eng, p);
        psi = -1.0 / guard(psi) + (hole ? a_hole : a_tooth);
        psi0 = -1.0 / guard(psi0) + (hole ? 2.0 : 0.0);
        if (i < kBurnIn) continue;
        g.add(std::log(std::abs(guard(psi))));
        double neg = psi < 0.0 ? 1.0 : 0.0;
        e.add((psi0 < 0.0 ? 1.0 : 0.0) - neg);
        f.add(neg);
    }
    RiccatiEstimate r;
    auto gm = g.result(), em = e.result();
    r.gamma_bar = gm.mean;
    r.stderr_gamma = gm.error;
    r.eta_bar = em.mean;
    r.stderr_eta = em.error;
    r.frac_negative = f.result().mean;
    r.n_iter = n_iter;
    r.seed = seed;
    r.family = Family::egt4;
    r.params.energy = energy;
    r.params.p = p;
    return r;
}

RiccatiEstimate lyapunov_upsilon(double energy, double p, std::size_t n_iter, std::uint64_t seed) {
    check_iters(n_iter);
    const double th = theta_of_energy(energy);
    const std::complex<double> d_tooth = 1.0 + std::polar(1.0, -th);
    const std::complex<double> d_hole = 2.0 * std::cos(th);
    const std::size_t n = n_iter - kBurnIn;
    Engine eng = make_engine(seed);
    std::complex<double> psi(1.0, 0.0);
    BatchMeans g(n);
    for (std::size_t i = 0; i < n_iter; ++i) {
        bool hole = draw_hole(eng, p);
        psi = (hole ? d_hole : d_tooth) - 1.0 / guard(psi);
        if (i >= kBurnIn) g.add(std::log(std::abs(guard(psi))));
    }
    RiccatiEstimate r;
    auto gm = g.result();
    r.gamma_bar = gm.mean;
    r.stderr_gamma = gm.error;
    r.n_iter = n_iter;
    r.seed = seed;
    r.family = Family::upsilon;
    r.params.energy = energy;
    r.params.theta = th;
    r.params.p = p;
    return r;
}

RiccatiEstimate lyapunov_binary_chain(double energy_chain, double v, double p, std::size_t n_iter,
                                      std::uint64_t seed) {
    check_iters(n_iter);
    check_finite({energy_chain, v, p});
    const std::size_t n = n_iter - kBurnIn;
    Engine eng = make_engine(seed);
    double psi = 1.0;
    BatchMeans g(n), e(n);
    for (std::size_t i = 0; i < n_iter; ++i) {
        bool hole = draw_hole(eng, p);
        psi = -1.0 / guard(psi) + (hole ? 0.0 : v) - energy_chain;
        if (i < kBurnIn) continue;
        g.add(std::log(std::abs(guard(psi))));
        e.add(psi < 0.0 ? 1.0 : 0.0);
    }
    RiccatiEstimate r;
    auto gm = g.result(), em = e.result();
    r.gamma_bar = gm.mean;
    r.stderr_gamma = gm.error;
    r.eta_bar = em.mean;
    r.stderr_eta = em.error;
    r.frac_negative = em.mean;
    r.n_iter = n_iter;
    r.seed = seed;
    r.family = Family::binary_chain;
    r.params.energy = energy_chain;
    r.params.v = v;
    r.params.p = p;
    return r;
}

RiccatiEstimate lyapunov_phase_shift(double energy, double delta, double p, std::size_t n_iter,
                                     std::uint64_t seed) {
    AndersonParams a = anderson_from_phase_shift(energy, delta);
    RiccatiEstimate r = lyapunov_binary_chain(a.energy_chain, a.v_strength, p, n_iter, seed);
    r.family = Family::phase_shift;
    r.params.energy = energy;
    r.params.theta = theta_of_energy(energy);
    r.params.delta = delta;
    return r;
}

RiccatiEstimate lyapunov_transfer(double energy_chain, double v, double p, std::size_t n_iter,
                                  std::uint64_t seed) {
    check_iters(n_iter);
    check_finite({energy_chain, v, p});
    const std::size_t n = n_iter - kBurnIn;
    Engine eng = make_engine(seed);
    // (u_n, u_{n-1}) -> ((V_n - E) u_n - u_{n-1}, u_n), renormalized every step
    double u = 1.0, w = 0.0;
    BatchMeans g(n);
    for (std::size_t i = 0; i < n_iter; ++i) {
        bool hole = draw_hole(eng, p);
        double un = ((hole ? 0.0 : v) - energy_chain) * u - w;
        double wn = u;
        double norm_new = std::hypot(un, wn), norm_old = std::hypot(u, w);
        if (i >= kBurnIn) g.add(std::log(norm_new / norm_old));
        u = un / norm_new;
        w = wn / norm_new;
    }
    RiccatiEstimate r;
    auto gm = g.result();
    r.gamma_bar = gm.mean;
    r.stderr_gamma = gm.error;
    r.n_iter = n_iter;
    r.seed = seed;
    r.family = Family::binary_chain;
    r.params.energy = energy_chain;
    r.params.v = v;
    r.params.p = p;
    return r;
}

double gamma_upsilon_regular(double energy) {
    const double th = theta_of_energy(energy);
    const std::complex<double> z = std::polar(1.0, -th);
    const std::complex<double> root = std::sqrt((z + 3.0) * (z - 1.0));
    double a = std::abs(0.5 * (1.0 + z + root)), b = std::abs(0.5 * (1.0 + z - root));
    return std::log(std::max(a, b));
}

ThoulessResult thouless_check(double p, double v, const std::vector<double>& energies,
                              std::size_t grid_points, std::size_t n_iter, std::uint64_t seed,
                              unsigned threads) {
    if (grid_points < 3) throw std::invalid_argument("thouless_check: grid too small");
    ThoulessResult out;
    const double lo = std::min(-2.0, v - 2.0) - 0.05, hi = std::max(2.0, v + 2.0) + 0.05;
    out.grid.resize(grid_points);
    out.eta.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
        out.grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    parallel_for(grid_points, threads, [&](std::size_t i) {
        out.eta[i] = lyapunov_binary_chain(out.grid[i], v, p, n_iter, seed).eta_bar;
    });
    // enforce the monotone envelope and the exact limits outside the support
    out.eta.front() = 0.0;
    out.eta.back() = 1.0;
    for (std::size_t i = 1; i < grid_points; ++i) out.eta[i] = std::max(out.eta[i], out.eta[i - 1]);

    auto eta_at = [&](double e) {
        auto it = std::upper_bound(out.grid.begin(), out.grid.end(), e);
        if (it == out.grid.begin()) return 0.0;
        if (it == out.grid.end()) return 1.0;
        std::size_t k = static_cast<std::size_t>(it - out.grid.begin());
        double t = (e - out.grid[k - 1]) / (out.grid[k] - out.grid[k - 1]);
        return (1.0 - t) * out.eta[k - 1] + t * out.eta[k];
    };

    out.energies = energies;
    out.gamma.resize(energies.size());
    out.gamma_err.resize(energies.size());
    out.thouless.resize(energies.size());
    out.rel_dev.resize(energies.size());
    parallel_for(energies.size(), threads, [&](std::size_t k) {
        RiccatiEstimate r = lyapunov_binary_chain(energies[k], v, p, n_iter, derive_seed(seed, k + 1));
        out.gamma[k] = r.gamma_bar;
        out.gamma_err[k] = r.stderr_gamma;
    });
    for (std::size_t k = 0; k < energies.size(); ++k) {
        const double e = energies[k];
        const double h0 = eta_at(e);
        // boundary terms of the integration by parts
        double val = std::log(std::abs(hi - e)) * (1.0 - h0) + std::log(std::abs(e - lo)) * h0;
        // trapezoid on the bounded integrand (eta(E') - eta(E)) / (E' - E)
        std::vector<double> f(grid_points);
        for (std::size_t i = 0; i < grid_points; ++i) {
            double d = out.grid[i] - e;
            f[i] = std::abs(d) < 1e-12 ? kNaN : (out.eta[i] - h0) / d;
        }
        for (std::size_t i = 0; i < grid_points; ++i) {
            if (!std::isnan(f[i])) continue;
            double left = i > 0 ? f[i - 1] : f[i + 1], right = i + 1 < grid_points ? f[i + 1] : f[i - 1];
            f[i] = 0.5 * (left + right);
        }
        CompensatedSum integral;
        for (std::size_t i = 0; i + 1 < grid_points; ++i)
            integral.add(0.5 * (f[i] + f[i + 1]) * (out.grid[i + 1] - out.grid[i]));
        val -= integral.value();
        out.thouless[k] = val;
        out.rel_dev[k] = std::abs(out.gamma[k] - val) / std::max(std::abs(out.gamma[k]), 1e-12);
        out.max_rel_dev = std::max(out.max_rel_dev, out.rel_dev[k]);
    }
    return out;
}

std::vector<double> egt4_grid(std::size_t steps) {
    std::vector<double> g(steps);
    for (std::size_t k = 0; k < steps; ++k)
        g[k] = 4.0 + (4.0 / 3.0) * static_cast<double>(k + 1) / static_cast<double>(steps);
    return g;
}

MinLyapunov min_lyapunov_egt4(double p, const std::vector<double>& energies, std::size_t n_iter,
                              std::uint64_t seed, unsigned threads) {
    if (energies.empty()) throw std::invalid_argument("min_lyapunov_egt4: empty grid");
    MinLyapunov m;
    m.energies = energies;
    m.gamma.resize(energies.size());
    m.gamma_err.resize(energies.size());
    parallel_for(energies.size(), threads, [&](std::size_t k) {
        // common random numbers keep the curve smooth across the grid
        RiccatiEstimate r = lyapunov_egt4(energies[k], p, n_iter, seed);
        m.gamma[k] = r.gamma_bar;
        m.gamma_err[k] = r.stderr_gamma;
    });
    auto it = std::min_element(m.gamma.begin(), m.gamma.end());
    auto k = static_cast<std::size_t>(it - m.gamma.begin());
    m.gamma_min = *it;
    m.stderr_gamma = m.gamma_err[k];
    m.argmin_energy = energies[k];
    return m;
}

ScalingFit small_e_scaling(double p, const std::vector<double>& thetas, std::size_t n_iter,
                           std::uint64_t seed, unsigned threads) {
    if (thetas.empty()) throw std::invalid_argument("small_e_scaling: empty theta grid");
    ScalingFit s;
    s.thetas = thetas;
    s.ratio.resize(thetas.size());
    s.ratio_err.resize(thetas.size());
    parallel_for(thetas.size(), threads, [&](std::size_t k) {
        double th = thetas[k];
        double energy = 2.0 - 2.0 * std::cos(th);
        RiccatiEstimate r = lyapunov_upsilon(energy, p, n_iter, derive_seed(seed, k));
        s.ratio[k] = r.gamma_bar / std::sqrt(th);
        s.ratio_err[k] = r.stderr_gamma / std::sqrt(th);
    });
    double wsum = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        double w = s.ratio_err[k] > 0.0 ? 1.0 / (s.ratio_err[k] * s.ratio_err[k]) : 1e30;
        wsum += w;
        acc += w * s.ratio[k];
    }
    s.prefactor = acc / wsum;
    s.stderr_prefactor = 1.0 / std::sqrt(wsum);
    s.target = std::sqrt((1.0 - p) / 2.0);
    s.rel_dev = s.target > 0.0 ? std::abs(s.prefactor - s.target) / s.target : std::abs(s.prefactor);
    return s;
}

KappaMoments simulate_kappa(double p, double dt, std::size_t n_steps, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("simulate_kappa: 0 <= p < 1 required");
    const double q = std::sqrt(1.0 - p);
    const std::complex<double> drift = 2.0 * q * std::polar(1.0, -std::numbers::pi / 4.0);
    const double noise = std::sqrt(p * (1.0 - p));
    const double relax = drift.real();  // slowest decay rate of the linear flow
    const auto burn = std::min<std::size_t>(n_steps / 10, static_cast<std::size_t>(10.0 / (relax * dt)));

    KappaMoments k;
    k.n_steps = n_steps;
    k.dt = dt;
    Engine eng = make_engine(seed);
    std::normal_distribution<double> gauss;  // only the moments matter here
    std::complex<double> kappa(0.0, 0.0);
    const std::size_t n = n_steps - burn;
    BatchMeans mx(n), my(n);
    double mean_x = 0.0, mean_y = 0.0;
    std::vector<std::array<double, 2>> keep;
    keep.reserve(n);
    const double sdt = std::sqrt(dt);
    for (std::size_t i = 0; i < n_steps; ++i) {
        double dw = gauss(eng) * sdt;
        kappa += -drift * kappa * dt + std::complex<double>(0.0, -noise * dw);
        if (i < burn) continue;
        mx.add(kappa.real());
        my.add(kappa.imag());
        keep.push_back({kappa.real(), kappa.imag()});
    }
    auto rx = mx.result(), ry = my.result();
    mean_x = rx.mean;
    mean_y = ry.mean;
    CompensatedSum cxx, cyy, cxy;
    for (auto& v : keep) {
        cxx.add((v[0] - mean_x) * (v[0] - mean_x));
        cyy.add((v[1] - mean_y) * (v[1] - mean_y));
        cxy.add((v[0] - mean_x) * (v[1] - mean_y));
    }
    const double m = static_cast<double>(keep.size());
    k.mean = {mean_x, mean_y};
    k.mean_err = {rx.error, ry.error};
    k.cov = {{{cxx.value() / m, cxy.value() / m}, {cxy.value() / m, cyy.value() / m}}};

    // A S + S A^T + B B^T = 0 with x' = A x + B dW
    Eigen::Matrix2d a;
    a << -drift.real(), drift.imag(), -drift.imag(), -drift.real();
    Eigen::Matrix3d lhs;
    lhs << 2 * a(0, 0), 2 * a(0, 1), 0, a(1, 0), a(0, 0) + a(1, 1), a(0, 1), 0, 2 * a(1, 0), 2 * a(1, 1);
    Eigen::Vector3d rhs(0.0, 0.0, -noise * noise);
    Eigen::Vector3d sol = lhs.fullPivLu().solve(rhs);
    k.cov_exact = {{{sol(0), sol(1)}, {sol(1), sol(2)}}};

    // noiseless chi flow, RK4 from an off-axis start
    const std::complex<double> target = q * std::polar(1.0, -std::numbers::pi / 4.0);
    auto f = [&](std::complex<double> c) { return -c * c - std::complex<double>(0.0, 1.0 - p); };
    std::complex<double> chi(0.3, 0.2);
    const double h = 1e-3;
    const auto flow_steps = static_cast<std::size_t>(std::max(40.0 / std::max(relax, 0.1), 40.0) / h);
    for (std::size_t i = 0; i < flow_steps; ++i) {
        auto k1 = f(chi), k2 = f(chi + 0.5 * h * k1), k3 = f(chi + 0.5 * h * k2), k4 = f(chi + h * k3);
        chi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    k.fixed_point_distance = std::abs(chi - target);
    return k;
}

}  // namespace combwalk
