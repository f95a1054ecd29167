#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "combwalk/comb.hpp"
#include "combwalk/errors.hpp"
#include "combwalk/riccati.hpp"
#include "combwalk/smatrix.hpp"
#include "doctest.h"

using namespace combwalk;

namespace {

const double kPi = std::numbers::pi;

// Checks the comb eigen-equation directly on the graph: spine site n has
// neighbours n +- 1 (Dirichlet or wrapped) and, on teeth, the first tooth
// site, where phi(n, 1) = A e^{i theta} + B e^{-i theta}.
double graph_residual(const CombConfig& c, double theta, const Eigen::VectorXcd& a,
                      const Eigen::VectorXcd& b) {
    const auto n = static_cast<Eigen::Index>(c.n_sites);
    const double e = 2.0 - 2.0 * std::cos(theta);
    const cplx z = std::polar(1.0, theta);
    Eigen::VectorXcd phi0 = a + b;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool tooth = c.tooth(static_cast<std::size_t>(i));
        cplx lhs = (tooth ? 3.0 : 2.0) * phi0(i);
        if (i > 0) lhs -= phi0(i - 1);
        else if (c.periodic()) lhs -= phi0(n - 1);
        if (i + 1 < n) lhs -= phi0(i + 1);
        else if (c.periodic()) lhs -= phi0(0);
        if (tooth) lhs -= a(i) * z + b(i) / z;
        worst = std::max(worst, std::abs(lhs - e * phi0(i)));
    }
    return worst;
}

Eigen::VectorXcd column(const Eigen::MatrixXcd& m, std::size_t j) {
    return m.col(static_cast<Eigen::Index>(j));
}

}  // namespace

TEST_CASE("assembly matches the stated diagonals") {
    auto c = comb_from_string("101", Boundary::open);
    auto [x, y] = assemble_xy(c, kPi / 2);
    CHECK(std::abs(x(1, 1)) < 1e-15);
    CHECK(std::abs(x(0, 0) - cplx(1.0, -1.0)) < 1e-15);
    CHECK(std::abs(x(0, 1) + 1.0) < 1e-15);
    CHECK((y - x.conjugate()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(assemble_xy(c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_smatrix(c, kPi), std::invalid_argument);
    CHECK(kEndpointS == -1.0);

    auto per = comb_from_string("1011", Boundary::periodic);
    auto [xp, yp] = assemble_xy(per, 1.0);
    CHECK(std::abs(xp(0, 3) + 1.0) < 1e-15);
    CHECK(std::abs(xp(3, 0) + 1.0) < 1e-15);
}

TEST_CASE("closed form for a lone tooth between Dirichlet walls") {
    // X = 1 + e^{-i theta}, Y = conj(X), so S = -e^{i theta}
    auto c = comb_from_string("1", Boundary::open);
    for (double th : {0.1, 0.7, 1.5, 2.9}) {
        auto s = compute_smatrix(c, th);
        REQUIRE(s.s_tooth.rows() == 1);
        CHECK(std::abs(s.s_tooth(0, 0) + std::polar(1.0, th)) < 1e-14);
        CHECK(std::abs(std::abs(s.s_tooth(0, 0)) - 1.0) < 1e-14);
    }
}

TEST_CASE("all-hole comb has an empty S and S_full = -1") {
    auto c = comb_from_string("00000", Boundary::open);
    auto s = compute_smatrix(c, 0.9);
    CHECK(s.s_tooth.size() == 0);
    CHECK((s.s_full + Eigen::MatrixXcd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("banded solve agrees with a dense solve and with the graph equations") {
    for (auto b : {Boundary::open, Boundary::periodic}) {
        auto c = sample_comb(0.4, 30, b, 11);
        for (double th : {0.05, 0.8, 2.2, 3.1}) {
            auto s = compute_smatrix(c, th);
            Eigen::MatrixXcd dense = -s.x_matrix.fullPivLu().solve(s.y_matrix);
            CHECK((dense - s.s_full).cwiseAbs().maxCoeff() < 1e-10);
            for (std::size_t t : s.teeth) {
                Eigen::VectorXcd bvec = Eigen::VectorXcd::Zero(30);
                bvec(static_cast<Eigen::Index>(t)) = 1.0;
                CHECK(graph_residual(c, th, column(s.s_full, t), bvec) < 1e-10);
            }
        }
    }
}

TEST_CASE("S-matrix invariants on random combs") {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        auto c = sample_comb(0.2 + 0.05 * static_cast<double>(seed % 10), 16 + 9 * seed,
                             seed % 2 ? Boundary::open : Boundary::periodic, seed);
        for (int k = 1; k <= 10; ++k) {
            auto s = compute_smatrix(c, kPi * k / 11.0);
            auto r = smatrix_residuals(s);
            worst = std::max(worst, r.max());
            CHECK(s.c_block.rows() == static_cast<Eigen::Index>(c.n_holes()));
            CHECK(s.c_block.cols() == static_cast<Eigen::Index>(c.n_teeth()));
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("X - Y follows the tooth projector with the assembly sign") {
    auto c = sample_comb(0.5, 20, Boundary::open, 3);
    auto s = compute_smatrix(c, 1.1);
    CHECK(smatrix_residuals(s).xy_difference < 1e-14);
}

TEST_CASE("Upsilon columns") {
    auto c = sample_comb(0.3, 40, Boundary::open, 5);
    auto s = compute_smatrix(c, 0.6);
    std::vector<std::vector<cplx>> cols;
    overlap_columns(c, 0.6, cols);
    std::size_t k = 0;
    for (std::size_t t : s.teeth) {
        auto u = upsilon(c, 0.6, t);
        CHECK(upsilon_residual(c, u) < 1e-12);
        double norm = 0.0;
        for (std::size_t n : s.teeth) norm += std::norm(u.a_coeffs[n]);
        CHECK(std::abs(norm - 1.0) < 1e-12);
        auto spine = upsilon_spine(u);
        for (std::size_t n = 0; n < c.n_sites; ++n) {
            cplx expect = s.s_full(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t)) +
                          (n == t ? 1.0 : 0.0);
            CHECK(std::abs(spine[n] - expect) < 1e-12);
            CHECK(std::abs(cols[k][n] - expect) < 1e-12);
        }
        ++k;
    }
    std::size_t hole = s.holes.front();
    CHECK_THROWS_AS(upsilon(c, 0.6, hole), std::invalid_argument);
}

TEST_CASE("tooth-column shortcut stays accurate near theta = 0") {
    // (S + 1) e_t = O(theta) on open combs; the direct difference loses digits
    auto c = sample_comb(0.5, 24, Boundary::open, 8);
    std::vector<std::vector<cplx>> cols;
    for (double th : {1e-3, 1e-5}) {
        overlap_columns(c, th, cols);
        auto u = upsilon(c, th, c.tooth(0) ? 0 : c.occupancy().find('1'));
        auto spine = upsilon_spine(u);
        double scale = 0.0;
        for (auto v : cols.front()) scale = std::max(scale, std::abs(v));
        CHECK(scale < 50.0 * th);
        for (std::size_t n = 0; n < c.n_sites; ++n)
            CHECK(std::abs(spine[n] - cols.front()[n]) < 1e-9);
    }
}

TEST_CASE("regular comb column decays at the closed-form rate") {
    const std::size_t n = 201;
    auto c = comb_from_string(std::string(n, '1'), Boundary::open);
    for (double th : {0.5, 1.2, 2.0}) {
        auto u = upsilon(c, th, 100);
        double e = 2.0 - 2.0 * std::cos(th);
        double rate = std::log(std::abs(u.a_coeffs[130]) / std::abs(u.a_coeffs[150])) / 20.0;
        CHECK(std::abs(rate - gamma_upsilon_regular(e)) < 1e-9);
    }
}

TEST_CASE("phase shifts reproduce the reduced spine equations") {
    for (std::uint64_t seed : {2u, 4u, 9u}) {
        auto c = sample_comb(0.5, 36, seed % 2 ? Boundary::periodic : Boundary::open, seed);
        for (double th : {0.3, 1.0, 2.5}) {
            auto ps = phase_shift_eigensystem(c, th);
            CHECK(ps.delta.size() == c.n_teeth());
            for (std::size_t k = 0; k < ps.delta.size(); ++k) {
                CHECK(std::abs(std::abs(ps.eigenvalues[k]) - 1.0) < 1e-12);
                CHECK(ps.delta[k] > -kPi);
                CHECK(ps.delta[k] <= kPi);
            }
            auto s = compute_smatrix(c, th);
            Eigen::MatrixXcd v = ps.vectors.cast<cplx>();
            Eigen::MatrixXcd d = v.transpose() * s.s_tooth * v;
            for (Eigen::Index k = 0; k < d.rows(); ++k) d(k, k) = 0.0;
            CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
            CHECK(ps.max_bth_residual < 1e-8);
        }
    }
}

TEST_CASE("flux balance") {
    auto c = sample_comb(0.4, 50, Boundary::open, 21);
    auto s = compute_smatrix(c, 1.3);
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(50);
    for (std::size_t t : s.teeth) b(static_cast<Eigen::Index>(t)) = cplx(std::sin(1.0 * t), std::cos(3.0 * t));
    Eigen::VectorXcd a = s.s_full * b;
    std::vector<cplx> av(a.data(), a.data() + 50), bv(b.data(), b.data() + 50);
    double norm_b = 0.0;
    for (std::size_t t : s.teeth) norm_b += std::norm(bv[t]);
    CHECK(flux_check(av, bv, c) < 1e-10 * norm_b);

    // hole-only input comes back as -B with nothing on the teeth
    std::vector<cplx> bh(50, cplx{}), ah;
    for (std::size_t h : s.holes) bh[h] = 1.0;
    Eigen::VectorXcd bhv = Eigen::Map<Eigen::VectorXcd>(bh.data(), 50);
    Eigen::VectorXcd ahv = s.s_full * bhv;
    ah.assign(ahv.data(), ahv.data() + 50);
    CHECK(flux_check(ah, bh, c) < 1e-12);
}

TEST_CASE("S varies continuously on a fine theta grid") {
    auto c = sample_comb(0.5, 40, Boundary::periodic, 17);
    const double h = 1e-3;
    std::vector<double> jumps;
    Eigen::MatrixXcd prev = compute_smatrix(c, 0.5).s_tooth;
    for (int k = 1; k <= 400; ++k) {
        Eigen::MatrixXcd cur = compute_smatrix(c, 0.5 + h * k).s_tooth;
        jumps.push_back((cur - prev).cwiseAbs().maxCoeff());
        prev = cur;
    }
    // the derivative estimate from half-steps bounds every full step
    double worst_ratio = 0.0;
    for (int k = 0; k < 400; k += 37) {
        double th = 0.5 + h * k;
        double half = (compute_smatrix(c, th + h / 2).s_tooth - compute_smatrix(c, th).s_tooth)
                          .cwiseAbs().maxCoeff();
        worst_ratio = std::max(worst_ratio, jumps[static_cast<std::size_t>(k)] / (2.0 * half));
    }
    CHECK(worst_ratio < 10.0);
    CHECK(*std::max_element(jumps.begin(), jumps.end()) < 0.5);
}
