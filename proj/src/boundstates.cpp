#include "combwalk/boundstates.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "combwalk/chainspec.hpp"
#include "combwalk/errors.hpp"

namespace combwalk {

namespace {

const double kSigmaMax = std::log(3.0) + 1e-9;
const double kSigmaFloor = 1e-12;
// Sturm counts resolve a double root only to a few 1e-9, so coinciding
// roots are grouped with a looser tolerance.
const double kClusterTol = 1e-7;

// sigma at which bound_count_below first exceeds `target`.
double locate_root(const CombConfig& comb, std::size_t target, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo < 1e-15) break;
        if (bound_count_below(comb, mid) > target)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double tail_norm_sq(const CombConfig& comb, const std::vector<double>& c, double sigma) {
    const double w = 1.0 / -std::expm1(-2.0 * sigma);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * c[i] * (comb.tooth(i) ? w : 1.0);
    return s;
}

void fix_sign(std::vector<double>& v) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax]) * (1.0 + 1e-12)) imax = i;
    if (v[imax] < 0)
        for (double& x : v) x = -x;
}

}  // namespace

double BoundState::tooth_weight() const { return 1.0 / -std::expm1(-2.0 * sigma); }

double bound_energy(double sigma) { return 2.0 + 2.0 * std::cosh(sigma); }

SpineOperator bound_operator(const CombConfig& comb, double sigma) {
    SpineOperator op;
    op.diag.resize(comb.n_sites);
    const double w = 1.0 + std::exp(-sigma);
    for (std::size_t i = 0; i < comb.n_sites; ++i) op.diag[i] = 2.0 + (comb.tooth(i) ? w : 0.0);
    op.off = -1.0;
    op.periodic = comb.periodic();
    return op;
}

std::size_t bound_count_below(const CombConfig& comb, double sigma) {
    return count_below(bound_operator(comb, sigma), bound_energy(sigma));
}

std::vector<BoundState> solve_bound_states(const CombConfig& comb, BoundSolveInfo* info,
                                           bool check_count) {
    BoundSolveInfo local;
    BoundSolveInfo& inf = info ? *info : local;
    inf = BoundSolveInfo{};
    inf.formula_count = n_e_gt4_formula(comb);
    std::vector<BoundState> states;
    if (comb.n_teeth() == 0) return states;

    const std::size_t c0 = bound_count_below(comb, kSigmaFloor);
    const std::size_t c_rej = bound_count_below(comb, kSigmaReject);
    const std::size_t c1 = bound_count_below(comb, kSigmaMax);
    inf.rejected_small_sigma = c_rej - c0;

    std::vector<double> sigmas;
    for (std::size_t j = c_rej; j < c1; ++j)
        sigmas.push_back(locate_root(comb, j, kSigmaReject, kSigmaMax));

    // Group roots that coincide (degenerate levels on symmetric periodic
    // combs); their vectors share one eigenspace.
    std::size_t start = 0;
    while (start < sigmas.size()) {
        std::size_t end = start + 1;
        while (end < sigmas.size() && sigmas[end] - sigmas[start] < kClusterTol) ++end;
        double sigma = sigmas[start];
        if (end - start > 1) {
            double m = 0.0;
            for (std::size_t k = start; k < end; ++k) m += sigmas[k];
            sigma = m / static_cast<double>(end - start);
        }
        SpineOperator op = bound_operator(comb, sigma);
        const double e = bound_energy(sigma);
        std::vector<std::vector<double>> vecs;
        for (std::size_t k = start; k < end; ++k)
            vecs.push_back(inverse_iteration(op, e, vecs, static_cast<unsigned>(k)));
        if (end - start > 1) {
            std::vector<std::size_t> cl;
            for (std::size_t k = start; k < end; ++k) cl.push_back(states.size() + (k - start));
            inf.degenerate_clusters.push_back(cl);
            // Re-orthogonalize in the tail-inclusive inner product so the
            // cluster members are orthogonal as comb states.
            const double w = 1.0 / -std::expm1(-2.0 * sigma);
            for (std::size_t a = 0; a < vecs.size(); ++a) {
                for (std::size_t b = 0; b < a; ++b) {
                    double dot = 0.0, nb = 0.0;
                    for (std::size_t i = 0; i < comb.n_sites; ++i) {
                        double wi = comb.tooth(i) ? w : 1.0;
                        dot += wi * vecs[a][i] * vecs[b][i];
                        nb += wi * vecs[b][i] * vecs[b][i];
                    }
                    for (std::size_t i = 0; i < comb.n_sites; ++i) vecs[a][i] -= dot / nb * vecs[b][i];
                }
                double nrm = 0.0;
                for (double x : vecs[a]) nrm += x * x;
                nrm = std::sqrt(nrm);
                for (double& x : vecs[a]) x /= nrm;
                fix_sign(vecs[a]);
            }
        }
        for (auto& v : vecs) {
            BoundState s;
            s.sigma = sigma;
            s.energy = e;
            s.norm_sq = tail_norm_sq(comb, v, sigma);
            s.amplitudes = std::move(v);
            inf.max_residual = std::max(inf.max_residual, bound_residual(comb, s));
            states.push_back(std::move(s));
        }
        start = end;
    }
    std::sort(states.begin(), states.end(),
              [](const BoundState& a, const BoundState& b) { return a.energy < b.energy; });
    if (check_count && states.size() != inf.formula_count) {
        std::ostringstream os;
        os << "bound-state count " << states.size() << " differs from formula "
           << inf.formula_count << " (rejected near threshold: " << inf.rejected_small_sigma
           << ", comb " << comb.occupancy() << ", " << to_string(comb.boundary) << ")";
        throw ConsistencyError(os.str());
    }
    return states;
}

double bound_inner(const CombConfig& comb, const BoundState& a, const BoundState& b) {
    // Tooth tails: sum_j exp(-(sigma + sigma') j), the (-1)^j factors cancel.
    const double w = 1.0 / -std::expm1(-(a.sigma + b.sigma));
    double s = 0.0;
    for (std::size_t i = 0; i < comb.n_sites; ++i)
        s += a.amplitudes[i] * b.amplitudes[i] * (comb.tooth(i) ? w : 1.0);
    return s;
}

double bound_residual(const CombConfig& comb, const BoundState& s) {
    return residual_inf(bound_operator(comb, s.sigma), s.energy, s.amplitudes);
}

bool count_bounds_check(const CombConfig& comb, std::size_t count) {
    const std::size_t nt = comb.n_teeth();
    const std::size_t n = comb.n_sites;
    // The lower bound N_t/2 loses one state on 2-hole chains and on uniform
    // cycles, the same configurations where the counting formula is lowered.
    const bool two_hole = is_k_hole_chain(comb, 2) && (!comb.periodic() || n % 4 == 0);
    const bool uniform_cycle = comb.periodic() && nt == n;
    std::size_t lower = (nt + 1) / 2;
    if ((two_hole || uniform_cycle) && lower > 0) --lower;
    return count >= lower && count <= nt;
}

std::vector<std::complex<double>> m_matrix_spectrum(const CombConfig& comb) {
    const auto n = static_cast<Eigen::Index>(comb.n_sites);
    if (n > 512) throw std::invalid_argument("m_matrix_spectrum: N > 512");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool tooth = comb.tooth(static_cast<std::size_t>(i));
        m(i, i) = tooth ? 1.0 : 0.0;
        if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -1.0;
        m(i, n + i) = tooth ? 0.0 : -1.0;
        m(n + i, i) = 1.0;
    }
    if (comb.periodic()) {
        m(0, n - 1) -= 1.0;
        m(n - 1, 0) -= 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    std::vector<std::complex<double>> out(es.eigenvalues().data(),
                                          es.eigenvalues().data() + 2 * n);
    return out;
}

}  // namespace combwalk
