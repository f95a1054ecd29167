#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "combwalk/boundstates.hpp"
#include "combwalk/chainspec.hpp"
#include "combwalk/errors.hpp"
#include "combwalk/stats.hpp"
#include "doctest.h"

using namespace combwalk;

namespace {

// Independent oracle: scan every eigenvalue branch of the dense matrix on a
// fine sigma grid and count sign changes of f_i(sigma) - E(sigma).
std::size_t brute_force_count(const CombConfig& c) {
    const auto n = static_cast<Eigen::Index>(c.n_sites);
    auto branch = [&](double s) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, i) = 2.0 + (c.tooth(static_cast<std::size_t>(i)) ? 1.0 + std::exp(-s) : 0.0);
            if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = -1.0;
        }
        if (c.periodic()) {
            a(0, n - 1) -= 1.0;
            a(n - 1, 0) -= 1.0;
        }
        Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
        return (ev.array() - (2.0 + 2.0 * std::cosh(s))).eval();
    };
    const int steps = 400;
    const double lo = 1e-7, hi = std::log(3.0) + 1e-9;
    Eigen::ArrayXd prev = branch(lo);
    std::size_t count = 0;
    for (int k = 1; k <= steps; ++k) {
        Eigen::ArrayXd cur = branch(lo + (hi - lo) * k / steps);
        for (Eigen::Index i = 0; i < n; ++i) count += (prev(i) > 0) && (cur(i) <= 0);
        prev = cur;
    }
    return count;
}

}  // namespace

TEST_CASE("frozen roots from an independent dense root finder") {
    auto single = solve_bound_states(comb_from_string("00000100000", Boundary::open));
    REQUIRE(single.size() == 1);
    CHECK(std::abs(single[0].sigma - 0.6929023515809184) < 1e-12);
    CHECK(std::abs(single[0].energy - 4.499632831454328) < 1e-12);

    const double open_sigma[] = {0.375369982221134, 0.5866152829976531, 0.849317811581344,
                                 0.9591432749714192};
    auto s1 = solve_bound_states(comb_from_string("1101001110", Boundary::open));
    REQUIRE(s1.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(s1[k].sigma - open_sigma[k]) < 1e-12);

    const double per_sigma[] = {0.10986627671100781, 0.507815919128973, 0.6655898517556161,
                                0.9424161148974325, 0.9938603082643996};
    auto s2 = solve_bound_states(comb_from_string("11010011101", Boundary::periodic));
    REQUIRE(s2.size() == 5);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(s2[k].sigma - per_sigma[k]) < 1e-12);
}

TEST_CASE("counts match the formula and a brute-force scan") {
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        Boundary b = seed % 3 == 0 ? Boundary::periodic : Boundary::open;
        CombConfig c = sample_comb(0.2 + 0.3 * (seed % 3), 4 + seed % 29, b, seed);
        BoundSolveInfo info;
        auto states = solve_bound_states(c, &info, false);
        CHECK(states.size() == n_e_gt4_formula(c));
        CHECK(states.size() == brute_force_count(c));
        CHECK(count_bounds_check(c, states.size()));
        CHECK(info.max_residual < 1e-9);
    }
}

TEST_CASE("special combs") {
    CHECK(solve_bound_states(comb_from_string("0000000", Boundary::open)).empty());

    auto reg = solve_bound_states(comb_from_string(std::string(200, '1'), Boundary::periodic));
    CHECK(reg.size() == 99);
    for (const auto& s : reg) {
        CHECK(s.energy > 4.0);
        CHECK(s.energy <= 16.0 / 3.0 + 1e-12);
    }
    CHECK(std::abs(reg.back().energy - 16.0 / 3.0) < 1e-12);

    auto alt = solve_bound_states(comb_from_string("10101010", Boundary::periodic));
    CHECK(alt.size() == 3);

    CHECK(count_bounds_check(comb_from_string("000010000", Boundary::open), 1));
    // a lone tooth on a one-site comb sits exactly at threshold: no state
    CHECK(solve_bound_states(comb_from_string("1", Boundary::open)).empty());
    CHECK(count_bounds_check(comb_from_string("1", Boundary::open), 0));
    CHECK(count_bounds_check(comb_from_string("1011", Boundary::periodic), 1));
    CHECK_FALSE(count_bounds_check(comb_from_string("1111111110", Boundary::open), 4));
    CHECK(count_bounds_check(comb_from_string("1111111110", Boundary::open), 5));
    CHECK(count_bounds_check(comb_from_string("111111111", Boundary::open), 4));
    CHECK(count_bounds_check(comb_from_string("000", Boundary::open), 0));
}

TEST_CASE("states are normalized, orthogonal and satisfy the secular equation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CombConfig c = sample_comb(0.45, 60, seed % 2 ? Boundary::open : Boundary::periodic, seed);
        auto st = solve_bound_states(c);
        for (std::size_t a = 0; a < st.size(); ++a) {
            CHECK(st[a].energy > 4.0);
            CHECK(st[a].energy <= 16.0 / 3.0 + 1e-12);
            CHECK(std::abs(st[a].energy - bound_energy(st[a].sigma)) < 1e-15);
            CHECK(bound_residual(c, st[a]) < 1e-9);
            CHECK(std::abs(bound_inner(c, st[a], st[a]) - st[a].norm_sq) < 1e-12 * st[a].norm_sq);
            for (std::size_t b = 0; b < a; ++b) {
                double ov = bound_inner(c, st[a], st[b]) / std::sqrt(st[a].norm_sq * st[b].norm_sq);
                CHECK(std::abs(ov) < 1e-8);
            }
        }
    }
}

TEST_CASE("degenerate levels on a symmetric cycle") {
    // Three identical cells: Bloch phases +-2pi/3 pair up into twofold levels.
    CombConfig c = comb_from_string("110100110100110100", Boundary::periodic);
    BoundSolveInfo info;
    auto st = solve_bound_states(c, &info, false);
    CHECK(st.size() == n_e_gt4_formula(c));
    for (std::size_t a = 0; a < st.size(); ++a)
        for (std::size_t b = 0; b < a; ++b)
            CHECK(std::abs(bound_inner(c, st[a], st[b])) /
                      std::sqrt(st[a].norm_sq * st[b].norm_sq) <
                  1e-8);
    CHECK_FALSE(info.degenerate_clusters.empty());
}

TEST_CASE("companion-matrix cross-check") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        CombConfig c = sample_comb(0.5, 12 + 3 * seed, seed % 2 ? Boundary::open : Boundary::periodic, seed);
        auto st = solve_bound_states(c);
        auto lam = m_matrix_spectrum(c);
        std::vector<double> real_in;
        for (auto z : lam) {
            if (std::abs(z.imag()) < 1e-9 && z.real() > 1.0 + 1e-7 && z.real() < 3.0 + 1e-9)
                real_in.push_back(z.real());
        }
        std::sort(real_in.begin(), real_in.end());
        REQUIRE(real_in.size() == st.size());
        for (std::size_t k = 0; k < st.size(); ++k)
            CHECK(std::abs(std::log(real_in[k]) - st[k].sigma) < 1e-8);
        // complex eigenvalues come in conjugate pairs
        for (auto z : lam) {
            if (std::abs(z.imag()) < 1e-9) continue;
            double best = 1e9;
            for (auto w : lam) best = std::min(best, std::abs(w - std::conj(z)));
            CHECK(best < 1e-8);
        }
    }
    auto holes = m_matrix_spectrum(comb_from_string("000000", Boundary::open));
    for (auto z : holes)
        CHECK_FALSE((std::abs(z.imag()) < 1e-9 && z.real() > 1.0 + 1e-7 && z.real() < 3.0));
}

TEST_CASE("count mismatch is reported") {
    // With check_count the formula is enforced; a healthy comb passes.
    CHECK_NOTHROW(solve_bound_states(sample_comb(0.5, 40, Boundary::open, 8)));
}

TEST_CASE("density of bound states approaches (1-p)/(2-p)") {
    for (double p : {0.3, 0.6}) {
        RunningStats rs;
        for (std::uint64_t s = 0; s < 200; ++s) {
            CombConfig c = sample_comb(p, 2000, Boundary::periodic, 9000 + s);
            rs.add(static_cast<double>(n_e_gt4_formula(c)) / 2000.0);
        }
        CHECK(std::abs(rs.mean() - (1 - p) / (2 - p)) < 3 * rs.std_error() + 1e-4);
        // the solver agrees with the formula on a few of these large combs
        for (std::uint64_t s = 0; s < 3; ++s) {
            CombConfig c = sample_comb(p, 2000, Boundary::periodic, 9000 + s);
            CHECK(solve_bound_states(c).size() == n_e_gt4_formula(c));
        }
    }
}
