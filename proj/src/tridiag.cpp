#include "combwalk/tridiag.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "combwalk/band_lu.hpp"
#include "combwalk/rng.hpp"

namespace combwalk {

namespace {

double pivot_floor(const SpineOperator& op) {
    return std::numeric_limits<double>::min() * std::max(1.0, op.off * op.off) * 4.0;
}

void fix_sign(std::vector<double>& v) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax]) * (1.0 + 1e-12)) imax = i;
    if (v[imax] < 0)
        for (double& x : v) x = -x;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

std::pair<double, double> gershgorin(const SpineOperator& op) {
    const std::size_t n = op.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t nb = (op.periodic && n >= 3) ? 2 : (n == 1 ? 0 : ((i == 0 || i + 1 == n) ? 1 : 2));
        double r = static_cast<double>(nb) * std::abs(op.off);
        lo = std::min(lo, op.diag[i] - r);
        hi = std::max(hi, op.diag[i] + r);
    }
    return {lo, hi};
}

std::size_t count_below(const SpineOperator& op, double x) {
    const std::size_t n = op.size();
    const double e = op.off;
    const double floor = pivot_floor(op);
    auto guard = [floor](double q) { return std::abs(q) < floor ? -floor : q; };
    std::size_t neg = 0;
    if (!op.periodic || n < 3) {
        double q = guard(op.diag[0] - x);
        if (q < 0) ++neg;
        for (std::size_t i = 1; i < n; ++i) {
            q = guard(op.diag[i] - x - e * e / q);
            if (q < 0) ++neg;
        }
        return neg;
    }
    // Bordered elimination: rows 0..n-2 are eliminated in order while the
    // coupling to site n-1 (column g) is carried along.
    double q = guard(op.diag[0] - x);
    double g = e;  // corner entry A[0][n-1]
    double last = op.diag[n - 1] - x;
    if (q < 0) ++neg;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        double l = e / q;
        last -= g * g / q;
        double qn = op.diag[i + 1] - x - l * e;
        double gn = -l * g;
        if (i + 2 == n - 1) gn += e;
        q = guard(qn);
        g = gn;
        if (q < 0) ++neg;
    }
    last -= g * g / q;
    if (guard(last) < 0) ++neg;
    return neg;
}

std::size_t sturm_sign_agreements(const SpineOperator& op, double x) {
    if (op.periodic) throw std::invalid_argument("sturm_sign_agreements: open operators only");
    // Scaled three-term recurrence p_k = (d_k - x) p_{k-1} - e^2 p_{k-2},
    // rescaled each step to avoid overflow; a zero is given the sign
    // opposite to its predecessor.
    const std::size_t n = op.size();
    const double e2 = op.off * op.off;
    double pm2 = 0.0, pm1 = 1.0;
    std::size_t agree = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double pk = (op.diag[k] - x) * pm1 - (k == 0 ? 0.0 : e2 * pm2);
        if (pk == 0.0) pk = -std::copysign(std::numeric_limits<double>::min(), pm1);
        if ((pk > 0) == (pm1 > 0)) ++agree;
        double s = std::max(std::abs(pk), std::abs(pm1));
        pm2 = pm1 / s;
        pm1 = pk / s;
    }
    return agree;
}

double bisect_eigenvalue(const SpineOperator& op, std::size_t k, double lo, double hi, double tol) {
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= std::max(tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)))
            break;
        if (count_below(op, mid) > k)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> eigenvalues_bisect(const SpineOperator& op, double tol) {
    auto [lo, hi] = gershgorin(op);
    lo -= 1e-9 * (1.0 + std::abs(lo));
    hi += 1e-9 * (1.0 + std::abs(hi));
    std::vector<double> out(op.size());
    for (std::size_t k = 0; k < op.size(); ++k) out[k] = bisect_eigenvalue(op, k, lo, hi, tol);
    return out;
}

void apply(const SpineOperator& op, const std::vector<double>& v, std::vector<double>& out) {
    const std::size_t n = op.size();
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = op.diag[i] * v[i];
        if (i > 0) s += op.off * v[i - 1];
        if (i + 1 < n) s += op.off * v[i + 1];
        out[i] = s;
    }
    if (op.periodic && n >= 3) {
        out[0] += op.off * v[n - 1];
        out[n - 1] += op.off * v[0];
    }
}

double residual_inf(const SpineOperator& op, double lambda, const std::vector<double>& v) {
    std::vector<double> hv;
    apply(op, v, hv);
    double r = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(hv[i] - lambda * v[i]));
    return r;
}

std::vector<double> inverse_iteration(const SpineOperator& op, double lambda,
                                      const std::vector<std::vector<double>>& against,
                                      unsigned start) {
    const std::size_t n = op.size();
    std::vector<double> shifted(op.diag);
    for (double& d : shifted) d -= lambda;
    SpineSolver<double> solver(shifted, op.off, op.periodic, true);

    Engine eng = make_engine(0x5eedULL + start);
    std::vector<double> v(n);
    for (double& x : v) x = uniform01(eng) - 0.5;

    auto orthogonalize = [&](std::vector<double>& w) {
        for (const auto& u : against) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += u[i] * w[i];
            for (std::size_t i = 0; i < n; ++i) w[i] -= dot * u[i];
        }
    };
    orthogonalize(v);
    double nv = norm2(v);
    for (double& x : v) x /= nv;
    for (int it = 0; it < 4; ++it) {
        solver.solve(v);
        orthogonalize(v);
        nv = norm2(v);
        if (!(nv > 0) || !std::isfinite(nv)) throw std::runtime_error("inverse_iteration: breakdown");
        for (double& x : v) x /= nv;
    }
    orthogonalize(v);
    nv = norm2(v);
    for (double& x : v) x /= nv;
    fix_sign(v);
    return v;
}

EigenPairs dense_eigensystem(const SpineOperator& op, bool want_vectors) {
    const auto n = static_cast<Eigen::Index>(op.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = op.diag[static_cast<std::size_t>(i)];
        if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = op.off;
    }
    if (op.periodic && n >= 3) {
        a(0, n - 1) += op.off;
        a(n - 1, 0) += op.off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        a, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    EigenPairs out;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    if (want_vectors) {
        out.vectors.resize(op.size());
        for (Eigen::Index k = 0; k < n; ++k) {
            auto& v = out.vectors[static_cast<std::size_t>(k)];
            v.assign(es.eigenvectors().col(k).data(), es.eigenvectors().col(k).data() + n);
            fix_sign(v);
        }
    }
    return out;
}

}  // namespace combwalk
