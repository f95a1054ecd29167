#include "combwalk/smatrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "combwalk/band_lu.hpp"
#include "combwalk/errors.hpp"
#include "combwalk/riccati.hpp"

namespace combwalk {

namespace {

void check_theta(double theta) {
    if (!(theta > 0.0 && theta < std::numbers::pi))
        throw std::invalid_argument(
            "theta must lie in (0, pi); at the endpoints the S-matrix is formally -1");
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

ScatterSet solve_at(const CombConfig& comb, double theta) {
    const std::size_t n = comb.n_sites;
    ScatterSet s;
    s.theta = theta;
    s.theta_used = theta;
    std::tie(s.x_matrix, s.y_matrix) = assemble_xy(comb, theta);
    for (std::size_t i = 0; i < n; ++i) (comb.tooth(i) ? s.teeth : s.holes).push_back(i);

    SpineSolver<cplx> solver(x_diagonal(comb, theta), cplx(-1.0, 0.0), comb.periodic());
    const auto ni = static_cast<Eigen::Index>(n);
    s.s_full.resize(ni, ni);
    Eigen::MatrixXcd xinv(ni, ni);
    std::vector<cplx> col(n);
    for (Eigen::Index j = 0; j < ni; ++j) {
        for (Eigen::Index i = 0; i < ni; ++i) col[static_cast<std::size_t>(i)] = -s.y_matrix(i, j);
        solver.solve(col);
        for (Eigen::Index i = 0; i < ni; ++i) s.s_full(i, j) = col[static_cast<std::size_t>(i)];
        std::fill(col.begin(), col.end(), cplx{});
        col[static_cast<std::size_t>(j)] = 1.0;
        solver.solve(col);
        for (Eigen::Index i = 0; i < ni; ++i) xinv(i, j) = col[static_cast<std::size_t>(i)];
    }
    auto norm1 = [](const Eigen::MatrixXcd& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); };
    s.cond_x = norm1(s.x_matrix) * norm1(xinv);
    if (!std::isfinite(s.cond_x)) s.cond_x = std::numeric_limits<double>::infinity();

    const auto nt = static_cast<Eigen::Index>(s.teeth.size());
    const auto nh = static_cast<Eigen::Index>(s.holes.size());
    s.s_tooth.resize(nt, nt);
    s.c_block.resize(nh, nt);
    for (Eigen::Index b = 0; b < nt; ++b) {
        auto jb = static_cast<Eigen::Index>(s.teeth[static_cast<std::size_t>(b)]);
        for (Eigen::Index a = 0; a < nt; ++a)
            s.s_tooth(a, b) = s.s_full(static_cast<Eigen::Index>(s.teeth[static_cast<std::size_t>(a)]), jb);
        for (Eigen::Index h = 0; h < nh; ++h)
            s.c_block(h, b) = s.s_full(static_cast<Eigen::Index>(s.holes[static_cast<std::size_t>(h)]), jb);
    }
    return s;
}

}  // namespace

double ScatterResiduals::max() const {
    return std::max({unitarity, symmetry, block, xy_conjugate, xy_difference, inverse_conj,
                     c_consistency});
}

std::vector<cplx> x_diagonal(const CombConfig& comb, double theta) {
    const cplx tooth = 1.0 + std::polar(1.0, -theta);
    const cplx hole = 2.0 * std::cos(theta);
    std::vector<cplx> d(comb.n_sites);
    for (std::size_t i = 0; i < comb.n_sites; ++i) d[i] = comb.tooth(i) ? tooth : hole;
    return d;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> assemble_xy(const CombConfig& comb, double theta) {
    check_theta(theta);
    const auto n = static_cast<Eigen::Index>(comb.n_sites);
    std::vector<cplx> d = x_diagonal(comb, theta);
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, i) = d[static_cast<std::size_t>(i)];
        if (i + 1 < n) x(i, i + 1) = x(i + 1, i) = -1.0;
    }
    if (comb.periodic()) {
        x(0, n - 1) += -1.0;
        x(n - 1, 0) += -1.0;
    }
    return {x, x.conjugate()};
}

ScatterSet compute_smatrix(const CombConfig& comb, double theta) {
    check_theta(theta);
    const double limit = 1e12;
    ScatterSet s;
    bool ok = true;
    try {
        s = solve_at(comb, theta);
    } catch (const std::runtime_error&) {
        ok = false;
    }
    if (ok && s.cond_x <= limit) return s;

    const double eps = 1e-7;
    ScatterSet best;
    bool have = false;
    for (double t : {theta - eps, theta + eps}) {
        if (!(t > 0.0 && t < std::numbers::pi)) continue;
        try {
            ScatterSet c = solve_at(comb, t);
            if (!have || c.cond_x < best.cond_x) {
                best = std::move(c);
                have = true;
            }
        } catch (const std::runtime_error&) {
        }
    }
    if (!have || best.cond_x > limit)
        throw SingularThetaError("X is singular near this theta; refine the grid", theta);
    best.theta = theta;
    return best;
}

ScatterResiduals smatrix_residuals(const ScatterSet& s) {
    ScatterResiduals r;
    const auto nt = s.s_tooth.rows();
    const auto n = s.s_full.rows();
    if (nt > 0) {
        r.unitarity = max_abs(s.s_tooth.adjoint() * s.s_tooth - Eigen::MatrixXcd::Identity(nt, nt));
        r.symmetry = max_abs(s.s_tooth - s.s_tooth.transpose());
        r.c_consistency = max_abs(s.c_block - s.c_block.conjugate() * s.s_tooth);
    }
    double blk = 0.0;
    for (std::size_t hb : s.holes) {
        auto j = static_cast<Eigen::Index>(hb);
        for (Eigen::Index i = 0; i < n; ++i) {
            cplx expect = (i == j) ? cplx(-1.0) : cplx(0.0);
            blk = std::max(blk, std::abs(s.s_full(i, j) - expect));
        }
    }
    r.block = blk;
    r.xy_conjugate = max_abs(s.y_matrix - s.x_matrix.conjugate());
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t k : s.teeth) t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    const cplx two_i_sin(0.0, 2.0 * std::sin(s.theta_used));
    r.xy_difference = max_abs(s.x_matrix - s.y_matrix + two_i_sin * t);
    r.inverse_conj = max_abs(s.s_full * s.s_full.conjugate() - Eigen::MatrixXcd::Identity(n, n));
    return r;
}

UpsilonState upsilon(const CombConfig& comb, double theta, std::size_t tooth) {
    check_theta(theta);
    if (tooth >= comb.n_sites || !comb.tooth(tooth))
        throw std::invalid_argument("upsilon: source site is not a tooth");
    const std::size_t n = comb.n_sites;
    std::vector<cplx> d = x_diagonal(comb, theta);
    SpineSolver<cplx> solver(d, cplx(-1.0), comb.periodic());
    // right-hand side -Y e_t = -conj(column t of X)
    std::vector<cplx> rhs(n, cplx{});
    rhs[tooth] = -std::conj(d[tooth]);
    auto nb = [&](std::size_t i, int dir) -> std::ptrdiff_t {
        std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + dir;
        if (j >= 0 && j < static_cast<std::ptrdiff_t>(n)) return j;
        if (comb.periodic() && n >= 3) return (j + static_cast<std::ptrdiff_t>(n)) % static_cast<std::ptrdiff_t>(n);
        return -1;
    };
    for (int dir : {-1, 1}) {
        std::ptrdiff_t j = nb(tooth, dir);
        if (j >= 0) rhs[static_cast<std::size_t>(j)] += 1.0;
    }
    solver.solve(rhs);
    UpsilonState u;
    u.theta = theta;
    u.source_tooth = tooth;
    u.a_coeffs = std::move(rhs);
    return u;
}

double upsilon_residual(const CombConfig& comb, const UpsilonState& u) {
    auto [x, y] = assemble_xy(comb, u.theta);
    const auto n = x.rows();
    Eigen::VectorXcd a(n), b = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = u.a_coeffs[static_cast<std::size_t>(i)];
    b(static_cast<Eigen::Index>(u.source_tooth)) = 1.0;
    return (x * a + y * b).cwiseAbs().maxCoeff();
}

std::vector<cplx> upsilon_spine(const UpsilonState& u) {
    std::vector<cplx> c = u.a_coeffs;
    c[u.source_tooth] += 1.0;
    return c;
}

PhaseShifts phase_shift_eigensystem(const CombConfig& comb, double theta) {
    ScatterSet s = compute_smatrix(comb, theta);
    PhaseShifts ps;
    ps.theta = theta;
    const auto nt = s.s_tooth.rows();
    if (nt == 0) return ps;
    // A generic real combination of the commuting parts separates the
    // eigenvalues; the irrational weight avoids accidental coincidences.
    Eigen::MatrixXd re = s.s_tooth.real();
    Eigen::MatrixXd im = s.s_tooth.imag();
    Eigen::MatrixXd comb_m = 0.5 * (re + re.transpose()) + std::numbers::sqrt2 / 2.0 * 0.5 * (im + im.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comb_m);
    ps.vectors = es.eigenvectors();
    const double energy = 2.0 - 2.0 * std::cos(theta);
    const std::size_t n = comb.n_sites;
    for (Eigen::Index k = 0; k < nt; ++k) {
        Eigen::VectorXd v = ps.vectors.col(k);
        cplx z = (v.transpose().cast<cplx>() * s.s_tooth * v.cast<cplx>())(0, 0);
        double delta = std::arg(z);
        if (delta <= -std::numbers::pi) delta = std::numbers::pi;
        ps.eigenvalues.push_back(std::polar(1.0, delta));
        ps.delta.push_back(delta);
        if (std::abs(std::abs(delta) - std::numbers::pi) < 1e-9) {
            ps.has_pi = true;
            continue;
        }
        // Extend to the spine: C = A + B, then B~ = C / (1 + e^{i delta})
        // obeys the reduced equations with potential V(E, delta) on teeth.
        Eigen::VectorXcd bfull = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
        for (Eigen::Index a = 0; a < nt; ++a)
            bfull(static_cast<Eigen::Index>(s.teeth[static_cast<std::size_t>(a)])) = v(a);
        Eigen::VectorXcd c = s.s_full * bfull + bfull;
        Eigen::VectorXcd bt = c / (1.0 + std::polar(1.0, delta));
        const double vpot = v_of_e_delta(energy, delta);
        double res = 0.0;
        const auto ni = static_cast<Eigen::Index>(n);
        for (Eigen::Index i = 0; i < ni; ++i) {
            cplx left = 2.0 * bt(i);
            if (i > 0) left -= bt(i - 1);
            else if (comb.periodic()) left -= bt(ni - 1);
            if (i + 1 < ni) left -= bt(i + 1);
            else if (comb.periodic()) left -= bt(0);
            if (comb.tooth(static_cast<std::size_t>(i))) left += vpot * bt(i);
            res = std::max(res, std::abs(left - energy * bt(i)) / std::max(1.0, std::abs(vpot)));
        }
        ps.max_bth_residual = std::max(ps.max_bth_residual, res / bt.cwiseAbs().maxCoeff());
    }
    return ps;
}

double flux_check(const std::vector<cplx>& a, const std::vector<cplx>& b, const CombConfig& comb) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < comb.n_sites; ++i) {
        if (!comb.tooth(i)) continue;
        sa += std::norm(a[i]);
        sb += std::norm(b[i]);
    }
    return std::abs(sa - sb);
}

void overlap_columns(const CombConfig& comb, double theta, std::vector<std::vector<cplx>>& out) {
    check_theta(theta);
    const std::size_t n = comb.n_sites;
    SpineSolver<cplx> solver(x_diagonal(comb, theta), cplx(-1.0), comb.periodic());
    const cplx factor(0.0, -2.0 * std::sin(theta));
    out.clear();
    for (std::size_t t = 0; t < n; ++t) {
        if (!comb.tooth(t)) continue;
        std::vector<cplx> col(n, cplx{});
        col[t] = factor;
        solver.solve(col);
        out.push_back(std::move(col));
    }
}

}  // namespace combwalk
