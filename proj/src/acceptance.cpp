#include "combwalk/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "combwalk/boundstates.hpp"
#include "combwalk/chainspec.hpp"
#include "combwalk/diffusion.hpp"
#include "combwalk/riccati.hpp"
#include "combwalk/rng.hpp"
#include "combwalk/smatrix.hpp"

namespace combwalk {

namespace {

const double kPi = std::numbers::pi;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Independent draws for the sizes and parameters of random test combs.
struct Draw {
    Engine eng;
    explicit Draw(std::uint64_t seed) : eng(make_engine(seed)) {}
    double uniform() { return uniform01(eng); }
    std::size_t size(std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(uniform() * static_cast<double>(hi - lo + 1));
    }
};

CriterionResult counting(const AcceptanceOptions& o) {
    const std::size_t n_combs = o.quick ? 200 : 1000;
    const double ps[] = {0.2, 0.5, 0.8};
    Draw d(derive_seed(o.seed, 1));
    std::size_t ok = 0;
    std::string first_bad;
    for (std::size_t i = 0; i < n_combs; ++i) {
        CombConfig c = sample_comb(ps[i % 3], d.size(1, 64), Boundary::open, derive_seed(o.seed, 1000 + i));
        auto st = solve_bound_states(c, nullptr, false);
        std::size_t f = n_e_gt4_formula(c);
        if (st.size() == f)
            ++ok;
        else if (first_bad.empty())
            first_bad = fmt(" first mismatch %s: %zu vs %zu", c.occupancy().c_str(), st.size(), f);
    }
    return {1, "", ok == n_combs, fmt("%zu/%zu open combs (N<=64) match the run formula%s", ok, n_combs,
                                      first_bad.c_str())};
}

CriterionResult idos_density(const AcceptanceOptions& o) {
    const std::size_t iters = o.quick ? 200000 : 1000000;
    bool pass = true;
    std::string det;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto r = lyapunov_egt4(16.0 / 3.0, p, iters, derive_seed(o.seed, 2000 + static_cast<int>(p * 10)));
        double target = p_loc_bound(p);
        double tol = std::max(3.0 * r.stderr_eta, 0.01 * target);
        bool ok = std::abs(r.eta_bar - target) <= tol;
        pass = pass && ok;
        det += fmt("p=%.1f eta=%.5f target %.5f tol %.5f%s; ", p, r.eta_bar, target, tol, ok ? "" : " FAIL");
    }
    return {2, "", pass, det};
}

CriterionResult deterministic(const AcceptanceOptions& o) {
    double worst = 0.0;
    for (int k = 1; k <= 20; ++k) {
        double e = 4.0 + (4.0 / 3.0) * k / 20.0;
        auto r = lyapunov_egt4(e, 1.0, 20000, derive_seed(o.seed, 3000 + k));
        worst = std::max(worst, std::abs(r.gamma_bar - std::acosh((e - 2.0) / 2.0)));
    }
    return {3, "", worst < 1e-10, fmt("max |gamma - arcosh((E-2)/2)| = %.2e over 20 energies in (4,16/3]", worst)};
}

CriterionResult smatrix_invariants(const AcceptanceOptions& o) {
    const std::size_t n_combs = o.quick ? 10 : 50, n_theta = o.quick ? 10 : 50;
    Draw d(derive_seed(o.seed, 4));
    ScatterResiduals worst;
    for (std::size_t i = 0; i < n_combs; ++i) {
        CombConfig c = sample_comb(0.1 + 0.8 * d.uniform(), d.size(3, 128),
                                   i % 2 ? Boundary::periodic : Boundary::open, derive_seed(o.seed, 4000 + i));
        for (std::size_t k = 0; k < n_theta; ++k) {
            double theta = kPi * (0.001 + 0.998 * d.uniform());
            auto r = smatrix_residuals(compute_smatrix(c, theta));
            worst.unitarity = std::max(worst.unitarity, r.unitarity);
            worst.symmetry = std::max(worst.symmetry, r.symmetry);
            worst.block = std::max(worst.block, r.block);
            worst.xy_difference = std::max(worst.xy_difference, r.xy_difference);
            worst.inverse_conj = std::max(worst.inverse_conj, r.inverse_conj);
            worst.xy_conjugate = std::max(worst.xy_conjugate, r.xy_conjugate);
            worst.c_consistency = std::max(worst.c_consistency, r.c_consistency);
        }
    }
    return {4, "", worst.max() < 1e-9,
            fmt("%zu combs x %zu theta: unitarity %.1e symmetry %.1e block %.1e X-Y+2i sin T %.1e S^-1=conj S %.1e",
                n_combs, n_theta, worst.unitarity, worst.symmetry, worst.block, worst.xy_difference,
                worst.inverse_conj)};
}

CriterionResult completeness(const AcceptanceOptions& o) {
    const std::size_t n_combs = o.quick ? 5 : 20;
    Draw d(derive_seed(o.seed, 5));
    double worst = 0.0;
    for (std::size_t i = 0; i < n_combs; ++i) {
        CombConfig c = sample_comb(0.1 + 0.8 * d.uniform(), d.size(4, 64),
                                   i % 2 ? Boundary::periodic : Boundary::open, derive_seed(o.seed, 5000 + i));
        auto rep = diffusion_report(c, d.size(0, c.n_sites - 1));
        worst = std::max(worst, std::abs(rep.completeness_residual));
    }
    return {5, "", worst < 1e-6, fmt("max |p_loc + sum p_esc - 1| = %.2e over %zu combs", worst, n_combs)};
}

CriterionResult regular(const AcceptanceOptions&) {
    auto c = comb_from_string(std::string(500, '1'), Boundary::periodic);
    double v = p_loc(c, 0);
    double rel = std::abs(v / p_loc_regular() - 1.0);
    return {6, "", rel < 0.01, fmt("P^loc(L=500) = %.8f, exact %.8f, rel %.2e", v, p_loc_regular(), rel)};
}

CriterionResult ensemble(const AcceptanceOptions& o) {
    const std::size_t l = o.quick ? 200 : 500, n = o.quick ? 200 : 1000;
    bool pass = true;
    std::string det = fmt("L=%zu N=%zu: ", l, n);
    for (double p : {0.2, 0.5, 0.8}) {
        auto e = ensemble_ploc(p, l, n, derive_seed(o.seed, 7000 + static_cast<int>(p * 10)), o.threads);
        bool ok = e.mean <= p_loc_bound(p) + 3.0 * e.stderr_mean;
        if (p == 0.5) {
            ok = ok && e.gap;
            det += fmt("p=0.5 gap [%.4f, %.4f]; ", e.gap_low, e.gap_high);
        }
        pass = pass && ok;
        det += fmt("p=%.1f mean %.5f +- %.5f <= %.5f%s; ", p, e.mean, e.stderr_mean, p_loc_bound(p), ok ? "" : " FAIL");
    }
    return {7, "", pass, det};
}

CriterionResult small_e(const AcceptanceOptions& o) {
    const std::size_t iters = o.quick ? 200000 : 1000000;
    std::vector<double> thetas;
    for (int k = 0; k <= 8; ++k) thetas.push_back(std::pow(10.0, -4.0 + 0.25 * k));
    bool pass = true;
    std::string det;
    for (double p : {0.0, 0.5}) {
        auto f = small_e_scaling(p, thetas, iters, derive_seed(o.seed, 8000 + static_cast<int>(p * 10)), o.threads);
        pass = pass && f.rel_dev < 0.05;
        det += fmt("p=%.1f prefactor %.5f +- %.5f target %.5f rel %.3f; ", p, f.prefactor, f.stderr_prefactor,
                   f.target, f.rel_dev);
    }
    return {8, "", pass, det};
}

CriterionResult escape(const AcceptanceOptions& o) {
    const double p = 0.25;
    std::vector<std::size_t> ds;
    for (std::size_t d = 20; d <= 100; d += 10) ds.push_back(d);
    auto f = escape_asymptotics(p, 400, ds, o.quick ? 10 : 200, derive_seed(o.seed, 9), 4,
                                o.threads);
    // amplitude at the asserted exponent: weighted mean of d^4 p_esc
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double d4 = std::pow(static_cast<double>(ds[i]), 4);
        double w = f.stderr_p_esc[i] > 0 ? 1.0 / std::pow(d4 * f.stderr_p_esc[i], 2) : 1.0;
        num += w * d4 * f.mean_p_esc[i];
        den += w;
    }
    const double amp4 = num / den;
    const bool slope_ok = std::abs(f.exponent + 4.0) <= 0.2;
    const bool amp_ok = std::abs(amp4 / f.target_coefficient - 1.0) <= 0.25;
    return {9, "", slope_ok && amp_ok,
            fmt("slope %.3f +- %.3f (target -4 +- 0.2%s); amplitude at slope -4: %.4f, free fit %.4f, "
                "target 6/(1-p)^3 = %.4f%s",
                f.exponent, f.exponent_err, slope_ok ? "" : ", FAIL", amp4, f.coefficient, f.target_coefficient,
                amp_ok ? "" : ", FAIL")};
}

CriterionResult oracle(const AcceptanceOptions& o) {
    const std::size_t n_combs = o.quick ? 1 : 5;
    const double ps[] = {0.25, 0.5, 0.75, 0.25, 0.5};
    OracleOptions opt;
    opt.total_time = o.quick ? 150.0 : 500.0;
    bool pass = true;
    std::string det;
    for (std::size_t i = 0; i < n_combs; ++i) {
        CombConfig c = sample_comb(ps[i], 40, Boundary::open, derive_seed(o.seed, 10000 + i));
        const std::size_t n0 = 20;
        auto st = solve_bound_states(c);
        auto r = evolve_oracle(c, n0, opt);
        auto pred = p_loc_profile_window(c, st, n0, opt.window);
        auto full = p_loc_profile(c, st, n0);
        // bound-only Hann average over the same samples: the part of the
        // mismatch due to finite T alone
        std::vector<double> bavg(c.n_sites, 0.0);
        double wsum = 0.0;
        for (double t : r.times) {
            double w = std::sin(kPi * t / opt.total_time);
            w *= w;
            auto pt = p_loc_at_time(c, st, n0, t);
            for (std::size_t n = 0; n < c.n_sites; ++n) bavg[n] += w * pt[n];
            wsum += w;
        }
        double worst = 0.0, worst_bound = 0.0;
        std::size_t entries = 0;
        for (std::size_t n = 0; n < c.n_sites; ++n) {
            if (pred[n] <= 1e-4) continue;
            ++entries;
            worst = std::max(worst, std::abs(r.time_average[n] / pred[n] - 1.0));
            if (full[n] > 1e-4) worst_bound = std::max(worst_bound, std::abs(bavg[n] / wsum / full[n] - 1.0));
        }
        bool ok = worst <= 0.02 && !r.boundary_reached && r.max_norm_drift < 1e-8;
        pass = pass && ok;
        det += fmt("comb %zu p=%.2f: %zu entries, worst %.2f%% (bound-only dephasing %.2f%%), norm drift %.0e%s; ", i,
                   ps[i], entries, 100 * worst, 100 * worst_bound, r.max_norm_drift, ok ? "" : " FAIL");
    }
    return {10, "", pass, fmt("T=%g: ", opt.total_time) + det};
}

CriterionResult spectral(const AcceptanceOptions& o) {
    const std::size_t n_combs = o.quick ? 20 : 100;
    Draw d(derive_seed(o.seed, 11));
    std::vector<double> grid;
    for (int g = 0; g <= 80; ++g) grid.push_back(-8.0 + 0.2 * g);
    double slope_lo = 0.0, slope_hi = 0.0, deriv = 0.0, sym = 0.0;
    std::size_t size_bad = 0;
    for (std::size_t i = 0; i < n_combs; ++i) {
        CombConfig c = sample_comb(0.1 + 0.8 * d.uniform(), d.size(2, 48), Boundary::open,
                                   derive_seed(o.seed, 11000 + i));
        auto f = spectral_flow(c, grid, o.threads);
        for (const auto& row : f.slopes)
            for (double s : row) {
                slope_lo = std::min(slope_lo, s);
                slope_hi = std::max(slope_hi, s);
            }
        const double v = -6.0 + 12.0 * d.uniform(), h = 1e-5;
        ChainHamiltonian ch{c, v};
        auto up = eigenvalues(ChainHamiltonian{c, v + h}, false).values;
        auto dn = eigenvalues(ChainHamiltonian{c, v - h}, false).values;
        for (std::size_t a = 0; a < c.n_sites; ++a)
            deriv = std::max(deriv, std::abs(de_dv_exact(ch, a) - (up[a] - dn[a]) / (2 * h)));
        auto e = eigenvalues(ch, false).values;
        auto em = eigenvalues(ChainHamiltonian{c, -v}, false).values;
        auto ec = eigenvalues(ChainHamiltonian{complement(c), v}, false).values;
        const std::size_t n = e.size();
        for (std::size_t a = 0; a < n; ++a) {
            sym = std::max(sym, std::abs(em[a] + e[n - 1 - a]));
            sym = std::max(sym, std::abs(ec[a] - (v - e[n - 1 - a])));
        }
        for (double vv : {-6.5, 5.0, 9.0}) {
            std::size_t low = 0, high = 0;
            for (double x : eigenvalues(ChainHamiltonian{c, vv}, false).values) {
                if (x >= -2 - 1e-9 && x <= 2 + 1e-9) ++low;
                if (x >= vv - 2 - 1e-9 && x <= vv + 2 + 1e-9) ++high;
            }
            if (low != c.n_holes() || high != c.n_teeth()) ++size_bad;
        }
    }
    bool pass = slope_lo >= -1e-9 && slope_hi <= 1 + 1e-9 && deriv < 1e-6 && sym < 1e-10 && size_bad == 0;
    return {11, "", pass,
            fmt("%zu combs: slopes in [%.2e, 1%+.2e], |dE/dV - FD| %.1e, symmetries %.1e, component-size misses %zu",
                n_combs, slope_lo, slope_hi - 1.0, deriv, sym, size_bad)};
}

CriterionResult thouless(const AcceptanceOptions& o) {
    auto th = thouless_check(0.5, 3.0, {-1.0, 0.0, 1.5, 3.0, 4.0}, 400, o.quick ? 300000 : 1000000,
                             derive_seed(o.seed, 12), o.threads);
    std::string det = "p=0.5 V=3: ";
    for (std::size_t i = 0; i < th.energies.size(); ++i)
        det += fmt("E=%.1f %.3f%% ", th.energies[i], 100 * th.rel_dev[i]);
    return {12, "", th.max_rel_dev < 0.02, det};
}

CriterionResult qualitative(const AcceptanceOptions& o) {
    const std::size_t iters = o.quick ? 50000 : 200000;
    std::string det;
    bool pass = true;
    // gamma > 0 on (4, 16/3] for 0 < p < 1
    double min_z = 1e300;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto m = min_lyapunov_egt4(p, egt4_grid(40), iters, derive_seed(o.seed, 13000 + static_cast<int>(p * 10)),
                                   o.threads);
        min_z = std::min(min_z, m.gamma_min / m.stderr_gamma);
    }
    pass = pass && min_z > 3.0;
    det += fmt("min gamma/stderr on (4,16/3] = %.1f; ", min_z);
    // gamma(delta_0) = 0: V(E, delta_0) vanishes and the chain is free
    double g0 = 0.0;
    for (double e : {0.5, 1.5, 2.5, 3.5})
        g0 = std::max(g0, std::abs(lyapunov_phase_shift(e, delta_zero(e), 0.5, iters, derive_seed(o.seed, 13100)).gamma_bar));
    pass = pass && g0 < 1e-3;
    det += fmt("max |gamma(delta_0)| = %.1e; ", g0);
    // continuity away from the cusp at E = 4, with common random numbers
    double jump = 0.0;
    double prev = kNaN;
    for (int k = 0; k <= 200; ++k) {
        double g = lyapunov_upsilon(0.5 + 3.0 * k / 200.0, 0.5, iters / 4, derive_seed(o.seed, 13200)).gamma_bar;
        if (k > 0) jump = std::max(jump, std::abs(g - prev));
        prev = g;
    }
    pass = pass && jump < 0.01;
    det += fmt("max step on E in [0.5,3.5] (dE=0.015) = %.4f; ", jump);
    // E < 4 and E > 4 recursions meet at E = 4
    double meet = 0.0;
    for (double p : {0.25, 0.5, 0.75}) {
        auto a = lyapunov_egt4(4.0 + 1e-6, p, iters, derive_seed(o.seed, 13300));
        auto b = lyapunov_upsilon(4.0 - 1e-6, p, iters, derive_seed(o.seed, 13300));
        double z = std::abs(a.gamma_bar - b.gamma_bar) /
                   (std::hypot(a.stderr_gamma, b.stderr_gamma) + 1e-3 / 3.0);
        meet = std::max(meet, z);
    }
    pass = pass && meet < 3.0;
    det += fmt("E=4 mismatch %.2f combined sigma", meet);
    return {13, "", pass, det};
}

}  // namespace

std::string criterion_name(int id) {
    static const char* names[] = {"bound-state counting",  "density of E>4 states",  "deterministic p=1 Lyapunov",
                                  "S-matrix invariants",   "completeness",           "regular-comb localization",
                                  "ensemble bound and gap", "small-E scaling",       "escape asymptotics",
                                  "oracle equivalence",    "spectral flow properties", "Thouless consistency",
                                  "qualitative properties"};
    if (id < 1 || id > kCriterionCount) throw std::out_of_range("criterion id must be in 1..13");
    return names[id - 1];
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opt) {
    using Fn = CriterionResult (*)(const AcceptanceOptions&);
    static const Fn fns[] = {counting, idos_density, deterministic, smatrix_invariants, completeness,
                             regular,  ensemble,     small_e,       escape,             oracle,
                             spectral, thouless,     qualitative};
    const std::string name = criterion_name(id);
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = fns[id - 1](opt);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.id = id;
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string format_result(const CriterionResult& r) {
    return fmt("%s %2d %s: %s (%.1f s)", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(), r.seconds);
}

}  // namespace combwalk
