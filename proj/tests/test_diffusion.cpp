#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "combwalk/boundstates.hpp"
#include "combwalk/diffusion.hpp"
#include "combwalk/quadrature.hpp"
#include "combwalk/rng.hpp"
#include "doctest.h"

using namespace combwalk;

namespace {

const double kPi = std::numbers::pi;

// Uniform periodic comb: plane waves with cos k < 0 are bound, each with
// localized weight 1 - 1/(1 - 2 cos k)^2 at the start site.
double regular_finite(std::size_t l) {
    double s = 0.0;
    for (std::size_t m = 0; m < l; ++m) {
        double c = std::cos(2.0 * kPi * static_cast<double>(m) / static_cast<double>(l));
        if (c < -1e-12) s += 1.0 - 1.0 / ((1.0 - 2.0 * c) * (1.0 - 2.0 * c));
    }
    return s / static_cast<double>(l);
}

// Dense Laplacian of the comb with teeth cut after j sites, in the same
// layout as the oracle.
Eigen::MatrixXd truncated_laplacian(const CombConfig& c, std::size_t j) {
    const std::size_t n = c.n_sites, nt = c.n_teeth(), dim = n + nt * j;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    auto link = [&](std::size_t a, std::size_t b) {
        h(a, b) -= 1.0;
        h(b, a) -= 1.0;
    };
    for (std::size_t i = 0; i < n; ++i) h(i, i) = c.tooth(i) ? 3.0 : 2.0;
    for (std::size_t i = 0; i + 1 < n; ++i) link(i, i + 1);
    if (c.periodic()) link(n - 1, 0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!c.tooth(i)) continue;
        const std::size_t base = n + k * j;
        link(i, base);
        for (std::size_t m = 0; m < j; ++m) h(base + m, base + m) = 2.0;
        for (std::size_t m = 0; m + 1 < j; ++m) link(base + m, base + m + 1);
        ++k;
    }
    return h;
}

}  // namespace

TEST_CASE("quadrature on known integrals") {
    auto r = integrate_adaptive(
        [](double x, std::vector<double>& out) {
            out[0] = std::sin(x) * std::sin(x);
            out[1] = std::exp(x);
            out[2] = std::sqrt(x);
        },
        3, 0.0, kPi, 1e-12);
    CHECK(r.converged);
    CHECK(std::abs(r.value[0] - kPi / 2) < 1e-12);
    CHECK(std::abs(r.value[1] - std::expm1(kPi)) < 1e-11);
    CHECK(std::abs(r.value[2] - 2.0 / 3.0 * std::pow(kPi, 1.5)) < 1e-10);
    CHECK(r.evaluations == 15 * (2 * r.panels - 1));

    auto capped = integrate_adaptive([](double x, std::vector<double>& out) { out[0] = 1.0 / std::sqrt(x); },
                                     1, 0.0, 1.0, 1e-15, 5);
    CHECK_FALSE(capped.converged);
    CHECK(capped.panels <= 5);
}

TEST_CASE("regular comb matches the finite-L sum and the infinite-L value") {
    CHECK(std::abs(p_loc_regular() - 0.36846862) < 1e-7);
    for (std::size_t l : {8, 12, 30, 101, 200}) {
        auto c = comb_from_string(std::string(l, '1'), Boundary::periodic);
        auto st = solve_bound_states(c);
        for (std::size_t n0 : {std::size_t{0}, l / 3})
            CHECK(std::abs(p_loc(c, st, n0) - regular_finite(l)) < 1e-10);
    }
    auto c500 = comb_from_string(std::string(500, '1'), Boundary::periodic);
    CHECK(std::abs(p_loc(c500, 250) / p_loc_regular() - 1.0) < 0.01);
}

TEST_CASE("combs without teeth localize nothing") {
    for (auto b : {Boundary::open, Boundary::periodic}) {
        auto c = comb_from_string("0000000", b);
        CHECK(p_loc(c, 3) == 0.0);
        auto esc = p_esc_all_teeth(c, 3);
        CHECK(esc.teeth.empty());
        CHECK(esc.total() == 0.0);
    }
}

TEST_CASE("completeness p_loc + sum p_esc = 1") {
    for (std::uint64_t s = 0; s < 8; ++s) {
        const double p = 0.2 + 0.1 * static_cast<double>(s % 6);
        auto c = sample_comb(p, 12 + 7 * s, s % 2 ? Boundary::periodic : Boundary::open, 500 + s);
        auto rep = diffusion_report(c, c.n_sites / 2);
        CAPTURE(s);
        CHECK(std::abs(rep.completeness_residual) < 1e-6);
        CHECK(std::abs(rep.profile_sum_residual) < 1e-12);
        for (const auto& [t, pe] : rep.p_esc_by_tooth) CHECK(pe >= 0.0);
    }
}

TEST_CASE("single-tooth p_esc agrees with the all-teeth integral") {
    auto c = comb_from_string("0110100111", Boundary::open);
    auto all = p_esc_all_teeth(c, 4);
    REQUIRE(all.teeth.size() == c.n_teeth());
    for (std::size_t i = 0; i < all.teeth.size(); i += 2)
        CHECK(std::abs(p_esc_tooth(c, 4, all.teeth[i]) - all.p_esc[i]) < 1e-7);
    CHECK_THROWS_AS(p_esc_tooth(c, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(p_loc(c, 10), std::invalid_argument);
}

TEST_CASE("profiles: windows, envelope and instantaneous sums") {
    auto c = sample_comb(0.4, 30, Boundary::open, 77);
    auto st = solve_bound_states(c);
    const std::size_t n0 = 13;
    const double pl = p_loc(c, st, n0);
    auto prof = p_loc_profile(c, st, n0);
    CHECK(std::abs(std::accumulate(prof.begin(), prof.end(), 0.0) - pl) < 1e-12);

    auto whole = p_loc_profile_window(c, st, n0, kWholeTooth);
    auto spine = p_loc_profile_window(c, st, n0, 0);
    auto w3 = p_loc_profile_window(c, st, n0, 3);
    auto q = q_envelope(c, st, n0);
    for (std::size_t n = 0; n < c.n_sites; ++n) {
        CHECK(whole[n] == doctest::Approx(prof[n]).epsilon(1e-14));
        CHECK(spine[n] <= w3[n] + 1e-15);
        CHECK(w3[n] <= whole[n] + 1e-15);
        if (!c.tooth(n)) CHECK(spine[n] == doctest::Approx(whole[n]).epsilon(1e-14));
        CHECK(q[n] + 1e-12 >= prof[n]);
    }

    double sum_c2 = 0.0;
    for (const auto& s : st) sum_c2 += s.amplitudes[n0] * s.amplitudes[n0] / s.norm_sq;
    for (double t : {0.0, 1.7, 40.0, 1234.5}) {
        auto pt = p_loc_at_time(c, st, n0, t);
        CHECK(std::abs(std::accumulate(pt.begin(), pt.end(), 0.0) - sum_c2) < 1e-12);
        for (std::size_t n = 0; n < c.n_sites; ++n) {
            CHECK(pt[n] >= -1e-15);
            CHECK(pt[n] <= q[n] + 1e-12);
        }
    }
}

TEST_CASE("long-time average of the bound component gives the profile") {
    // small comb with well separated levels; the Hann-weighted mean of the
    // instantaneous profile converges like 1/(T dE)^2
    auto c = comb_from_string("1101001", Boundary::open);
    auto st = solve_bound_states(c);
    REQUIRE(st.size() >= 2);
    const std::size_t n0 = 1;
    auto prof = p_loc_profile(c, st, n0);
    const double t_max = 4000.0, dt = 0.25;
    std::vector<double> avg(c.n_sites, 0.0);
    double wsum = 0.0;
    for (double t = 0.0; t <= t_max; t += dt) {
        double w = std::sin(kPi * t / t_max);
        w *= w;
        auto pt = p_loc_at_time(c, st, n0, t);
        for (std::size_t n = 0; n < c.n_sites; ++n) avg[n] += w * pt[n];
        wsum += w;
    }
    for (std::size_t n = 0; n < c.n_sites; ++n) CHECK(std::abs(avg[n] / wsum - prof[n]) < 1e-4);
}

TEST_CASE("degenerate cycle levels are orthogonal and give a positive profile") {
    auto c = comb_from_string(std::string(40, '1'), Boundary::periodic);
    BoundSolveInfo info;
    auto st = solve_bound_states(c, &info);
    CHECK_FALSE(info.degenerate_clusters.empty());
    for (std::size_t a = 0; a < st.size(); ++a)
        for (std::size_t b = a + 1; b < st.size(); ++b)
            CHECK(std::abs(bound_inner(c, st[a], st[b])) < 1e-9);
    // translation invariance: the same P^loc from every start site
    auto all = p_loc_all(c, st);
    for (double v : all) CHECK(std::abs(v - all[0]) < 1e-10);
}

TEST_CASE("oracle propagation matches dense exponentiation") {
    auto c = comb_from_string("10110", Boundary::open);
    const std::size_t j = 25, n0 = 2;
    OracleOptions o;
    o.total_time = 6.0;
    o.tooth_length = j;
    o.sample_dt = 0.5;
    o.window = 0;
    o.keep_snapshots = true;
    auto r = evolve_oracle(c, n0, o);
    REQUIRE(r.snapshots.size() == 13);
    CHECK(r.snapshots[0].site_prob[n0] == 1.0);
    CHECK(r.max_norm_drift < 1e-12);
    CHECK(r.max_energy_drift < 1e-12);
    CHECK(r.tooth_length == j);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(truncated_laplacian(c, j));
    const auto& u = es.eigenvectors();
    const auto& lam = es.eigenvalues();
    for (std::size_t s : {std::size_t{3}, std::size_t{12}}) {
        const double t = r.snapshots[s].time;
        Eigen::VectorXcd coeff = u.row(static_cast<Eigen::Index>(n0)).transpose().cast<std::complex<double>>();
        for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -lam(k) * t);
        Eigen::VectorXcd psi = u.cast<std::complex<double>>() * coeff;
        for (std::size_t n = 0; n < c.n_sites; ++n)
            CHECK(std::abs(std::norm(psi(static_cast<Eigen::Index>(n))) - r.snapshots[s].site_prob[n]) < 1e-12);
    }
}

TEST_CASE("oracle defaults and argument checks") {
    OracleOptions o;
    CHECK(o.window == 1);
    CHECK(o.hann);
    auto c = comb_from_string("111", Boundary::open);
    o.total_time = 2.0;
    auto r = evolve_oracle(c, 1, o);
    CHECK(r.tooth_length == 108);
    CHECK_FALSE(r.boundary_reached);
    CHECK(r.times.back() == doctest::Approx(2.0));
    o.total_time = -1.0;
    CHECK_THROWS_AS(evolve_oracle(c, 1, o), std::invalid_argument);
}

TEST_CASE("oracle time average approaches the windowed profile on a short comb") {
    auto c = comb_from_string("1011011", Boundary::open);
    auto st = solve_bound_states(c);
    const std::size_t n0 = 3;
    OracleOptions o;
    o.total_time = 300.0;
    auto r = evolve_oracle(c, n0, o);
    CHECK_FALSE(r.boundary_reached);
    auto pred = p_loc_profile_window(c, st, n0, 1);
    for (std::size_t n = 0; n < c.n_sites; ++n)
        if (pred[n] > 1e-2) CHECK(std::abs(r.time_average[n] / pred[n] - 1.0) < 0.05);
}

TEST_CASE("ensemble P^loc respects the upper bound and is thread independent") {
    auto a = ensemble_ploc(0.5, 60, 12, 9, 1);
    auto b = ensemble_ploc(0.5, 60, 12, 9, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.histogram == b.histogram);
    CHECK(a.mean <= p_loc_bound(0.5) + 3.0 * a.stderr_mean);
    CHECK(std::accumulate(a.histogram.begin(), a.histogram.end(), std::size_t{0}) == 60 * 12);
    for (std::size_t i = 0; i < a.histogram.size(); ++i)
        CHECK(a.histogram[i] == a.hist_tooth[i] + a.hist_hole[i]);
    CHECK(a.tooth_min <= a.tooth_max);
    CHECK(p_loc_bound(0.0) == 0.5);
}

TEST_CASE("escape asymptotics bookkeeping") {
    auto f1 = escape_asymptotics(0.25, 60, {4, 8, 12}, 3, 5, 2, 1, 1e-10);
    auto f3 = escape_asymptotics(0.25, 60, {4, 8, 12}, 3, 5, 2, 3, 1e-10);
    CHECK(f1.mean_p_esc == f3.mean_p_esc);
    CHECK(f1.target_coefficient == doctest::Approx(6.0 / std::pow(0.75, 3)));
    CHECK(f1.exponent < 0.0);
    CHECK(f1.mean_p_esc[0] > f1.mean_p_esc[2]);
}
