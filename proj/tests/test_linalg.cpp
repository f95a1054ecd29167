#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "combwalk/band_lu.hpp"
#include "combwalk/rng.hpp"
#include "combwalk/stats.hpp"
#include "combwalk/tridiag.hpp"
#include "doctest.h"

using namespace combwalk;

namespace {

Eigen::MatrixXd dense(const SpineOperator& op) {
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = op.diag[static_cast<std::size_t>(i)];
        if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = op.off;
    }
    if (op.periodic) {
        a(0, n - 1) += op.off;
        a(n - 1, 0) += op.off;
    }
    return a;
}

SpineOperator random_op(std::size_t n, bool periodic, std::uint64_t seed) {
    Engine eng = make_engine(seed);
    SpineOperator op;
    op.diag.resize(n);
    for (double& d : op.diag) d = 4.0 * uniform01(eng) - 2.0;
    op.periodic = periodic;
    return op;
}

}  // namespace

TEST_CASE("banded LU matches dense solves") {
    for (bool periodic : {false, true}) {
        for (std::size_t n : {3u, 4u, 5u, 17u, 64u}) {
            Engine eng = make_engine(n * 7 + periodic);
            std::vector<std::complex<double>> diag(n);
            for (auto& d : diag) d = {uniform01(eng) - 0.5, uniform01(eng) - 0.5};
            const std::complex<double> off(-1.0, 0.0);
            Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
            for (std::size_t i = 0; i < n; ++i) {
                a(i, i) = diag[i];
                if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = off;
            }
            if (periodic) {
                a(0, n - 1) += off;
                a(n - 1, 0) += off;
            }
            std::vector<std::complex<double>> b(n);
            Eigen::VectorXcd be(n);
            for (std::size_t i = 0; i < n; ++i) b[i] = be(i) = {uniform01(eng), uniform01(eng)};
            Eigen::VectorXcd xe = a.fullPivLu().solve(be);
            SpineSolver<std::complex<double>> s(diag, off, periodic);
            s.solve(b);
            double err = 0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(b[i] - xe(i)));
            CHECK(err < 1e-10 * (1 + xe.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("inertia counts agree with dense eigenvalues") {
    for (bool periodic : {false, true}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            SpineOperator op = random_op(5 + seed * 3, periodic, seed);
            Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense(op)).eigenvalues();
            for (double x = -4.2; x < 4.2; x += 0.173) {
                std::size_t expect = 0;
                for (Eigen::Index k = 0; k < ev.size(); ++k) expect += ev(k) < x;
                CHECK(count_below(op, x) == expect);
                if (!periodic) CHECK(sturm_sign_agreements(op, x) == op.size() - expect);
            }
            std::vector<double> bis = eigenvalues_bisect(op, 1e-14);
            for (std::size_t k = 0; k < bis.size(); ++k)
                CHECK(std::abs(bis[k] - ev(static_cast<Eigen::Index>(k))) < 1e-12);
        }
    }
}

TEST_CASE("inverse iteration vectors") {
    SpineOperator op = random_op(40, false, 3);
    std::vector<double> ev = eigenvalues_bisect(op, 1e-15);
    std::vector<std::vector<double>> vs;
    for (std::size_t k = 0; k < ev.size(); ++k) {
        vs.push_back(inverse_iteration(op, ev[k], {}, static_cast<unsigned>(k)));
        CHECK(residual_inf(op, ev[k], vs.back()) < 1e-12);
    }
    for (std::size_t a = 0; a < vs.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            double d = 0;
            for (std::size_t i = 0; i < 40; ++i) d += vs[a][i] * vs[b][i];
            CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) < 1e-10);
        }

    // Degenerate pair on a symmetric cycle: orthogonalized within the cluster.
    SpineOperator cyc;
    cyc.diag.assign(12, 0.0);
    cyc.periodic = true;
    double lam = -2.0 * std::cos(2.0 * M_PI / 12.0);
    auto v1 = inverse_iteration(cyc, lam, {}, 1);
    auto v2 = inverse_iteration(cyc, lam, {v1}, 2);
    double d = 0;
    for (std::size_t i = 0; i < 12; ++i) d += v1[i] * v2[i];
    CHECK(std::abs(d) < 1e-12);
    CHECK(residual_inf(cyc, lam, v2) < 1e-12);
}

TEST_CASE("statistics helpers") {
    CompensatedSum cs;
    cs.add(1.0);
    for (int i = 0; i < 1000; ++i) cs.add(1e-16);
    CHECK(std::abs(cs.value() - (1.0 + 1e-13)) < 1e-18);

    std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    LinearFit f = fit_line(x, y);
    CHECK(std::abs(f.slope - 2.0) < 1e-14);
    CHECK(std::abs(f.intercept - 1.0) < 1e-14);

    // iid uniforms: batch-means error close to sqrt(1/12 / n)
    Engine eng = make_engine(9);
    const std::size_t n = 200000;
    BatchMeans bm(n);
    for (std::size_t i = 0; i < n; ++i) bm.add(uniform01(eng));
    MeanError r = bm.result();
    double se = std::sqrt(1.0 / 12.0 / n);
    CHECK(std::abs(r.mean - 0.5) < 4 * se);
    CHECK(r.error > 0.7 * se);
    CHECK(r.error < 1.3 * se);
}
