#include "combwalk/chainspec.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "combwalk/errors.hpp"
#include "combwalk/parallel.hpp"

namespace combwalk {

SpineOperator ChainHamiltonian::op() const {
    SpineOperator o;
    o.diag.resize(comb.n_sites);
    for (std::size_t i = 0; i < comb.n_sites; ++i) o.diag[i] = comb.tooth(i) ? v_strength : 0.0;
    o.off = -1.0;
    o.periodic = comb.periodic();
    return o;
}

double ChainHamiltonian::scale() const { return std::max(4.0, std::abs(v_strength) + 2.0); }

ChainSpectrum eigenvalues(const ChainHamiltonian& chain, bool want_vectors) {
    if (!std::isfinite(chain.v_strength)) throw std::invalid_argument("eigenvalues: V not finite");
    if (chain.comb.n_sites == 0) throw std::invalid_argument("eigenvalues: empty comb");
    SpineOperator op = chain.op();
    ChainSpectrum out;
    if (op.periodic) {
        EigenPairs ep = dense_eigensystem(op, want_vectors);
        out.values = std::move(ep.values);
        out.vectors = std::move(ep.vectors);
        return out;
    }
    out.values = eigenvalues_bisect(op, 1e-14 * chain.scale());
    if (want_vectors) {
        out.vectors.reserve(out.values.size());
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.vectors.push_back(inverse_iteration(op, out.values[k], {}, static_cast<unsigned>(k)));
    }
    return out;
}

SpectralFlow spectral_flow(const CombConfig& comb, const std::vector<double>& v_grid,
                           unsigned threads) {
    if (v_grid.size() < 2) throw std::invalid_argument("spectral_flow: need two grid points");
    if (!std::is_sorted(v_grid.begin(), v_grid.end()))
        throw std::invalid_argument("spectral_flow: grid not sorted");
    SpectralFlow f;
    f.v_grid = v_grid;
    f.levels.resize(v_grid.size());
    parallel_for(v_grid.size(), threads, [&](std::size_t g) {
        f.levels[g] = eigenvalues(ChainHamiltonian{comb, v_grid[g]}, false).values;
    });
    for (std::size_t g = 0; g < v_grid.size(); ++g) {
        double scale = std::max(4.0, std::abs(v_grid[g]) + 2.0);
        const auto& lv = f.levels[g];
        for (std::size_t a = 1; a < lv.size(); ++a) {
            if (lv[a] - lv[a - 1] < 1e-9 * scale) {
                f.near_crossings.push_back(g);
                break;
            }
        }
        if (g + 1 < v_grid.size()) {
            double dv = v_grid[g + 1] - v_grid[g];
            std::vector<double> s(lv.size());
            for (std::size_t a = 0; a < lv.size(); ++a) s[a] = (f.levels[g + 1][a] - lv[a]) / dv;
            f.slopes.push_back(std::move(s));
        }
    }
    return f;
}

double de_dv_exact(const ChainHamiltonian& chain, std::size_t level) {
    const CombConfig& comb = chain.comb;
    if (level >= comb.n_sites) throw std::invalid_argument("de_dv_exact: level out of range");
    ChainSpectrum sp = eigenvalues(chain, true);
    const double tol = 1e-9 * chain.scale();
    std::vector<std::size_t> cluster{level};
    for (std::size_t a = level; a-- > 0 && sp.values[level] - sp.values[a] < tol;) cluster.push_back(a);
    for (std::size_t a = level + 1; a < sp.values.size() && sp.values[a] - sp.values[level] < tol; ++a)
        cluster.push_back(a);
    if (cluster.size() > 1) {
        std::sort(cluster.begin(), cluster.end());
        throw DegeneracyError("de_dv_exact: degenerate level", cluster);
    }
    const auto& v = sp.vectors[level];
    double s = 0.0;
    for (std::size_t i = 0; i < comb.n_sites; ++i)
        if (comb.tooth(i)) s += v[i] * v[i];
    return s;
}

std::size_t n_e_gt4_formula(const CombConfig& comb) {
    const std::size_t nt = comb.n_teeth();
    if (nt == 0) return 0;
    const std::size_t n = comb.n_sites;
    if (comb.periodic() && nt == n) {
        // Uniform cycle: modes cos(2 pi m / N) < 0, boundary mode at E = 16/3
        // included.
        std::size_t c = 0;
        for (std::size_t m = 0; m < n; ++m)
            if (4 * m > n && 4 * m < 3 * n) ++c;
        return c;
    }
    RunLengths r = run_lengths(comb);
    std::size_t count = (nt + r.n_t_odd) / 2;
    bool two_hole = is_k_hole_chain(comb, 2);
    if (two_hole && (!comb.periodic() || n % 4 == 0)) --count;
    return count;
}

std::pair<double, double> penrose(double v_strength, double energy) {
    return {2.0 * std::atan((v_strength - energy) / 2.0), 2.0 * std::atan(energy / 2.0)};
}

std::vector<double> hole_string_spectrum(const CombConfig& comb) {
    std::vector<double> out;
    const std::size_t n = comb.n_sites;
    if (comb.n_teeth() == 0 && comb.periodic()) {
        for (std::size_t m = 0; m < n; ++m)
            out.push_back(-2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(m) /
                                          static_cast<double>(n)));
        std::sort(out.begin(), out.end());
        return out;
    }
    for (std::size_t len : run_lengths(comb).hole_runs)
        for (std::size_t k = 1; k <= len; ++k)
            out.push_back(-2.0 * std::cos(std::numbers::pi * static_cast<double>(k) /
                                          static_cast<double>(len + 1)));
    std::sort(out.begin(), out.end());
    return out;
}

LemmaReport lemma_invariant_checks(const CombConfig& comb, const std::vector<double>& v_grid) {
    LemmaReport rep;
    ChainClass cls = classify_chain(comb);
    auto nearest = [](const std::vector<double>& vals, double e) {
        double d = std::numeric_limits<double>::infinity();
        for (double x : vals) d = std::min(d, std::abs(x - e));
        return d;
    };
    auto fail = [&rep](const std::string& what, double v, double e, double d) {
        std::ostringstream os;
        os.precision(17);
        os << what << " at V=" << v << " E=" << e << " distance=" << d;
        rep.failures.push_back(os.str());
    };
    const bool two_tooth_zero = is_k_tooth_chain(comb, 2) && !cls.uniform &&
                                (!comb.periodic() || comb.n_sites % 4 == 0);
    const bool two_hole_zero = is_k_hole_chain(comb, 2) && !cls.uniform &&
                               (!comb.periodic() || comb.n_sites % 4 == 0);
    for (double v : v_grid) {
        ChainHamiltonian h{comb, v};
        std::vector<double> vals = eigenvalues(h, false).values;
        const double scale = h.scale();
        // On a cycle the standing wave sin(pi p n / k) must close up, which
        // needs p L / k even.
        auto closes = [&comb](unsigned k, unsigned p) {
            return !comb.periodic() || (p * (comb.length() / k)) % 2 == 0;
        };
        for (unsigned k : cls.k_tooth) {
            for (unsigned p = 1; p < k; ++p) {
                if (!closes(k, p)) continue;
                double e = -2.0 * std::cos(std::numbers::pi * p / k);
                double d = nearest(vals, e);
                ++rep.checks;
                if (d > 1e-10 * scale) fail("k-tooth level " + std::to_string(k) + " missing", v, e, d);
            }
        }
        for (unsigned k : cls.k_hole) {
            for (unsigned p = 1; p < k; ++p) {
                if (!closes(k, p)) continue;
                double e = v - 2.0 * std::cos(std::numbers::pi * p / k);
                double d = nearest(vals, e);
                ++rep.checks;
                if (d > 1e-10 * scale) fail("k-hole level " + std::to_string(k) + " missing", v, e, d);
            }
        }
        if (cls.is_generic && v > 2.0) {
            double d0 = nearest(vals, 0.0);
            double dv = nearest(vals, v);
            rep.checks += 2;
            if (d0 <= 1e-8) fail("generic comb has E=0", v, 0.0, d0);
            if (dv <= 1e-8) fail("generic comb has E=V", v, v, dv);
        }
        if (two_tooth_zero) {
            double d0 = nearest(vals, 0.0);
            ++rep.checks;
            if (d0 > 1e-10 * scale) fail("2-tooth chain lacks E=0", v, 0.0, d0);
        }
        if (two_hole_zero) {
            double dv = nearest(vals, v);
            ++rep.checks;
            if (dv > 1e-10 * scale) fail("2-hole chain lacks E=V", v, v, dv);
        }
    }
    return rep;
}

}  // namespace combwalk
