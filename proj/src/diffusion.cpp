#include "combwalk/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "combwalk/band_lu.hpp"
#include "combwalk/parallel.hpp"
#include "combwalk/quadrature.hpp"
#include "combwalk/riccati.hpp"
#include "combwalk/rng.hpp"
#include "combwalk/smatrix.hpp"
#include "combwalk/stats.hpp"

namespace combwalk {

namespace {

void check_site(const CombConfig& comb, std::size_t n0) {
    if (n0 >= comb.n_sites) throw std::invalid_argument("start site out of range");
}

// Normalized spine amplitudes c_sigma(n) = C_n / sqrt(norm_sq).
std::vector<std::vector<double>> normalized(const std::vector<BoundState>& states) {
    std::vector<std::vector<double>> c;
    c.reserve(states.size());
    for (const auto& s : states) {
        double f = 1.0 / std::sqrt(s.norm_sq);
        std::vector<double> v(s.amplitudes);
        for (double& x : v) x *= f;
        c.push_back(std::move(v));
    }
    return c;
}

// Index ranges of states with coinciding sigma (states are sorted by energy).
std::vector<std::pair<std::size_t, std::size_t>> levels(const std::vector<BoundState>& states,
                                                        double tol) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t a = 0;
    while (a < states.size()) {
        std::size_t b = a + 1;
        while (b < states.size() && std::abs(states[b].sigma - states[a].sigma) < tol) ++b;
        out.emplace_back(a, b);
        a = b;
    }
    return out;
}

double tooth_tail(double sigma, std::size_t window) {
    // sum_{j=0}^{window} exp(-2 sigma j)
    if (window == kWholeTooth) return 1.0 / -std::expm1(-2.0 * sigma);
    return -std::expm1(-2.0 * sigma * static_cast<double>(window + 1)) / -std::expm1(-2.0 * sigma);
}

std::vector<double> profile_impl(const CombConfig& comb, const std::vector<BoundState>& states,
                                 std::size_t n0, std::size_t window, double tol) {
    check_site(comb, n0);
    std::vector<double> prof(comb.n_sites, 0.0);
    auto c = normalized(states);
    for (auto [a, b] : levels(states, tol)) {
        const double w = tooth_tail(states[a].sigma, window);
        for (std::size_t n = 0; n < comb.n_sites; ++n) {
            double amp = 0.0;
            for (std::size_t k = a; k < b; ++k) amp += c[k][n0] * c[k][n];
            prof[n] += amp * amp * (comb.tooth(n) ? w : 1.0);
        }
    }
    return prof;
}

}  // namespace

double p_loc_regular() {
    const double pi = std::numbers::pi;
    return 0.5 - 2.0 / (3.0 * pi) + std::sqrt(3.0) / (9.0 * pi) * std::log(2.0 + std::sqrt(3.0));
}

double p_loc_bound(double p) { return (1.0 - p) / (2.0 - p); }

double p_loc(const CombConfig& comb, const std::vector<BoundState>& states, std::size_t n0) {
    check_site(comb, n0);
    double s = 0.0;
    for (const auto& st : states) s += st.amplitudes[n0] * st.amplitudes[n0] / st.norm_sq;
    return s;
}

double p_loc(const CombConfig& comb, std::size_t n0) {
    return p_loc(comb, solve_bound_states(comb), n0);
}

std::vector<double> p_loc_all(const CombConfig& comb, const std::vector<BoundState>& states) {
    std::vector<double> out(comb.n_sites, 0.0);
    for (const auto& st : states)
        for (std::size_t n = 0; n < comb.n_sites; ++n)
            out[n] += st.amplitudes[n] * st.amplitudes[n] / st.norm_sq;
    return out;
}

std::vector<double> p_loc_profile(const CombConfig& comb, const std::vector<BoundState>& states,
                                  std::size_t n0, double cluster_tol) {
    return profile_impl(comb, states, n0, kWholeTooth, cluster_tol);
}

std::vector<double> p_loc_profile_window(const CombConfig& comb,
                                         const std::vector<BoundState>& states, std::size_t n0,
                                         std::size_t window, double cluster_tol) {
    return profile_impl(comb, states, n0, window, cluster_tol);
}

std::vector<double> q_envelope(const CombConfig& comb, const std::vector<BoundState>& states,
                               std::size_t n0) {
    check_site(comb, n0);
    auto c = normalized(states);
    const std::size_t k = states.size();
    std::vector<double> q(comb.n_sites, 0.0);
    for (std::size_t n = 0; n < comb.n_sites; ++n) {
        double s = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            double fa = std::abs(c[a][n0] * c[a][n]);
            if (fa == 0.0) continue;
            for (std::size_t b = 0; b < k; ++b) {
                double w = comb.tooth(n) ? 1.0 / -std::expm1(-(states[a].sigma + states[b].sigma)) : 1.0;
                s += fa * std::abs(c[b][n0] * c[b][n]) * w;
            }
        }
        q[n] = s;
    }
    return q;
}

std::vector<double> p_loc_at_time(const CombConfig& comb, const std::vector<BoundState>& states,
                                  std::size_t n0, double t) {
    check_site(comb, n0);
    auto c = normalized(states);
    const std::size_t k = states.size();
    std::vector<double> out(comb.n_sites, 0.0);
    for (std::size_t n = 0; n < comb.n_sites; ++n) {
        double s = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            double fa = c[a][n0] * c[a][n];
            for (std::size_t b = 0; b < k; ++b) {
                double w = comb.tooth(n) ? 1.0 / -std::expm1(-(states[a].sigma + states[b].sigma)) : 1.0;
                s += std::cos(t * (states[a].energy - states[b].energy)) * fa * c[b][n0] * c[b][n] * w;
            }
        }
        out[n] = s;
    }
    return out;
}

double EscapeResult::total() const {
    CompensatedSum s;
    for (double v : p_esc) s.add(v);
    return s.value();
}

EscapeResult p_esc_all_teeth(const CombConfig& comb, std::size_t n0, const QuadratureSpec& q) {
    check_site(comb, n0);
    EscapeResult res;
    for (std::size_t i = 0; i < comb.n_sites; ++i)
        if (comb.tooth(i)) res.teeth.push_back(i);
    const std::size_t dim = res.teeth.size();
    if (dim == 0) {
        res.converged = true;
        return res;
    }
    std::vector<cplx> g(comb.n_sites);
    auto at_theta = [&](double theta, double jac, std::vector<double>& out) {
        SpineSolver<cplx> solver(x_diagonal(comb, theta), cplx(-1.0), comb.periodic());
        std::fill(g.begin(), g.end(), cplx{});
        g[n0] = 1.0;
        solver.solve(g);
        const double s = std::sin(theta);
        const double f = 4.0 * s * s / (2.0 * std::numbers::pi) * jac;
        for (std::size_t k = 0; k < dim; ++k) out[k] = f * std::norm(g[res.teeth[k]]);
    };
    const double root = std::sqrt(q.split);
    auto low = integrate_adaptive([&](double u, std::vector<double>& out) { at_theta(u * u, 2.0 * u, out); },
                                  dim, 0.0, root, 0.5 * q.abs_tol, q.max_panels / 2, 4);
    auto high = integrate_adaptive([&](double th, std::vector<double>& out) { at_theta(th, 1.0, out); },
                                   dim, q.split, std::numbers::pi, 0.5 * q.abs_tol, q.max_panels / 2, 8);
    res.p_esc.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) res.p_esc[k] = low.value[k] + high.value[k];
    res.achieved_error = low.error + high.error;
    res.evaluations = low.evaluations + high.evaluations;
    res.converged = low.converged && high.converged;
    return res;
}

double p_esc_tooth(const CombConfig& comb, std::size_t n0, std::size_t tooth, const QuadratureSpec& q) {
    if (tooth >= comb.n_sites || !comb.tooth(tooth))
        throw std::invalid_argument("p_esc_tooth: target is not a tooth");
    auto r = p_esc_all_teeth(comb, n0, q);
    auto it = std::find(r.teeth.begin(), r.teeth.end(), tooth);
    return r.p_esc[static_cast<std::size_t>(it - r.teeth.begin())];
}

DiffusionReport diffusion_report(const CombConfig& comb, std::size_t n0, const QuadratureSpec& q) {
    auto states = solve_bound_states(comb);
    DiffusionReport rep;
    rep.start_site = n0;
    rep.p_loc = p_loc(comb, states, n0);
    auto esc = p_esc_all_teeth(comb, n0, q);
    for (std::size_t k = 0; k < esc.teeth.size(); ++k) rep.p_esc_by_tooth[esc.teeth[k]] = esc.p_esc[k];
    rep.completeness_residual = rep.p_loc + esc.total() - 1.0;
    rep.quadrature_error = esc.achieved_error;
    rep.profile = p_loc_profile(comb, states, n0);
    CompensatedSum s;
    for (double v : rep.profile) s.add(v);
    rep.profile_sum_residual = s.value() - rep.p_loc;
    return rep;
}

EnsemblePloc ensemble_ploc(double p, std::size_t length, std::size_t n_samples, std::uint64_t seed,
                           unsigned threads) {
    EnsemblePloc e;
    e.p = p;
    e.length = length;
    e.n_samples = n_samples;
    std::vector<std::vector<double>> values(n_samples);
    std::vector<CombConfig> combs(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t s) {
        combs[s] = sample_comb(p, length, Boundary::periodic, derive_seed(seed, s));
        values[s] = p_loc_all(combs[s], solve_bound_states(combs[s]));
    });
    const std::size_t bins = 100;
    e.histogram.assign(bins, 0);
    e.hist_tooth.assign(bins, 0);
    e.hist_hole.assign(bins, 0);
    RunningStats comb_means;
    bool any_tooth = false, any_hole = false;
    for (std::size_t s = 0; s < n_samples; ++s) {
        CompensatedSum m;
        for (std::size_t n = 0; n < length; ++n) {
            double v = values[s][n];
            m.add(v);
            auto b = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(std::max(v, 0.0) * bins));
            ++e.histogram[b];
            if (combs[s].tooth(n)) {
                ++e.hist_tooth[b];
                e.tooth_min = std::min(e.tooth_min, v);
                e.tooth_max = std::max(e.tooth_max, v);
                any_tooth = true;
            } else {
                ++e.hist_hole[b];
                e.hole_min = std::min(e.hole_min, v);
                e.hole_max = std::max(e.hole_max, v);
                any_hole = true;
            }
        }
        comb_means.add(m.value() / static_cast<double>(length));
    }
    e.mean = comb_means.mean();
    e.stderr_mean = comb_means.std_error();
    if (any_tooth && any_hole) {
        if (e.hole_max < e.tooth_min) {
            e.gap = true;
            e.gap_low = e.hole_max;
            e.gap_high = e.tooth_min;
        } else if (e.tooth_max < e.hole_min) {
            e.gap = true;
            e.gap_low = e.tooth_max;
            e.gap_high = e.hole_min;
        }
    }
    return e;
}

EscapeFit escape_asymptotics(double p, std::size_t length, const std::vector<std::size_t>& distances,
                             std::size_t n_samples, std::uint64_t seed, std::size_t starts_per_comb,
                             unsigned threads, double abs_tol) {
    if (distances.size() < 2) throw std::invalid_argument("escape_asymptotics: need two distances");
    for (std::size_t d : distances)
        if (4 * d > length) throw std::invalid_argument("escape_asymptotics: distances must be <= L/4");
    if (starts_per_comb == 0 || starts_per_comb > length)
        throw std::invalid_argument("escape_asymptotics: bad number of start sites");
    const std::size_t nd = distances.size();
    // per comb: mean over available (start, target) pairs at each distance
    std::vector<std::vector<double>> per_comb(n_samples, std::vector<double>(nd, kNaN));
    QuadratureSpec q;
    q.abs_tol = abs_tol;
    q.max_panels = 20000;
    parallel_for(n_samples, threads, [&](std::size_t s) {
        CombConfig comb = sample_comb(p, length, Boundary::periodic, derive_seed(seed, s));
        std::vector<double> acc(nd, 0.0);
        std::vector<std::size_t> cnt(nd, 0);
        for (std::size_t k = 0; k < starts_per_comb; ++k) {
            std::size_t n0 = k * length / starts_per_comb;
            auto esc = p_esc_all_teeth(comb, n0, q);
            std::vector<double> by_site(length, kNaN);
            for (std::size_t i = 0; i < esc.teeth.size(); ++i) by_site[esc.teeth[i]] = esc.p_esc[i];
            for (std::size_t di = 0; di < nd; ++di) {
                for (std::size_t t : {(n0 + distances[di]) % length, (n0 + length - distances[di]) % length}) {
                    if (std::isnan(by_site[t])) continue;
                    acc[di] += by_site[t];
                    ++cnt[di];
                }
            }
        }
        for (std::size_t di = 0; di < nd; ++di)
            if (cnt[di] > 0) per_comb[s][di] = acc[di] / static_cast<double>(cnt[di]);
    });
    EscapeFit fit;
    fit.distances = distances;
    fit.target_coefficient = 6.0 / std::pow(1.0 - p, 3);
    std::vector<double> x, y, sy;
    for (std::size_t di = 0; di < nd; ++di) {
        RunningStats rs;
        for (std::size_t s = 0; s < n_samples; ++s)
            if (!std::isnan(per_comb[s][di])) rs.add(per_comb[s][di]);
        fit.mean_p_esc.push_back(rs.mean());
        fit.stderr_p_esc.push_back(rs.std_error());
        if (rs.mean() > 0.0) {
            x.push_back(std::log(static_cast<double>(distances[di])));
            y.push_back(std::log(rs.mean()));
            sy.push_back(rs.std_error() > 0.0 ? rs.std_error() / rs.mean() : 1e-3);
        }
    }
    if (x.size() < 2) throw std::runtime_error("escape_asymptotics: no positive means to fit");
    LinearFit lf = fit_line(x, y, sy);
    fit.exponent = lf.slope;
    fit.exponent_err = std::sqrt(lf.var_slope);
    fit.coefficient = std::exp(lf.intercept);
    fit.coefficient_err = fit.coefficient * std::sqrt(lf.var_intercept);
    fit.cov = lf.cov;
    return fit;
}

namespace {

// Comb graph with truncated teeth. Spine sites first, then tooth k's sites
// j = 1..J at offset N + k J + (j - 1).
struct TruncatedComb {
    std::size_t n = 0, j = 0;
    bool periodic = false;
    std::vector<std::size_t> tooth_index;  // spine site -> tooth number or npos
    std::vector<std::size_t> tooth_site;   // tooth number -> spine site
    std::size_t size() const { return n + tooth_site.size() * j; }

    void apply(const std::vector<cplx>& v, std::vector<cplx>& out) const {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t k = tooth_index[i];
            cplx s = (k == npos ? 2.0 : 3.0) * v[i];
            if (i > 0) s -= v[i - 1];
            else if (periodic) s -= v[n - 1];
            if (i + 1 < n) s -= v[i + 1];
            else if (periodic) s -= v[0];
            if (k != npos) s -= v[n + k * j];
            out[i] = s;
        }
        for (std::size_t k = 0; k < tooth_site.size(); ++k) {
            const std::size_t base = n + k * j;
            for (std::size_t m = 0; m < j; ++m) {
                cplx s = 2.0 * v[base + m];
                s -= m == 0 ? v[tooth_site[k]] : v[base + m - 1];
                if (m + 1 < j) s -= v[base + m + 1];
                out[base + m] = s;
            }
        }
    }
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

}  // namespace

OracleResult evolve_oracle(const CombConfig& comb, std::size_t n0, const OracleOptions& opt) {
    check_site(comb, n0);
    if (!(opt.total_time > 0.0) || !(opt.sample_dt > 0.0))
        throw std::invalid_argument("evolve_oracle: times must be positive");
    TruncatedComb tc;
    tc.n = comb.n_sites;
    tc.periodic = comb.periodic();
    tc.j = opt.tooth_length ? opt.tooth_length
                            : static_cast<std::size_t>(4.0 * opt.total_time) + 100;
    tc.tooth_index.assign(tc.n, TruncatedComb::npos);
    for (std::size_t i = 0; i < tc.n; ++i)
        if (comb.tooth(i)) {
            tc.tooth_index[i] = tc.tooth_site.size();
            tc.tooth_site.push_back(i);
        }
    const std::size_t dim = tc.size();
    const std::size_t window = std::min(opt.window, tc.j);

    OracleResult res;
    res.tooth_length = tc.j;
    std::vector<cplx> psi(dim, cplx{}), t0(dim), t1(dim), t2(dim), acc(dim), hv(dim);
    psi[n0] = 1.0;

    auto site_probs = [&](const std::vector<cplx>& v) {
        std::vector<double> out(tc.n, 0.0);
        for (std::size_t i = 0; i < tc.n; ++i) {
            double s = std::norm(v[i]);
            std::size_t k = tc.tooth_index[i];
            if (k != TruncatedComb::npos)
                for (std::size_t m = 0; m < window; ++m) s += std::norm(v[tc.n + k * tc.j + m]);
            out[i] = s;
        }
        return out;
    };
    auto expect_h = [&](const std::vector<cplx>& v) {
        tc.apply(v, hv);
        CompensatedSum s;
        for (std::size_t i = 0; i < dim; ++i) s.add((std::conj(v[i]) * hv[i]).real());
        return s.value();
    };
    auto norm2 = [&](const std::vector<cplx>& v) {
        CompensatedSum s;
        for (const auto& x : v) s.add(std::norm(x));
        return s.value();
    };
    const double e0 = expect_h(psi);

    // Chebyshev coefficients for one step: spectrum of H lies in [0, 6]
    const double centre = 3.0, radius = 3.0, dt = opt.sample_dt;
    std::vector<cplx> coef;
    {
        const double x = radius * dt;
        for (int k = 0;; ++k) {
            double jk = std::cyl_bessel_j(static_cast<double>(k), x);
            cplx ik = std::pow(cplx(0.0, -1.0), k);
            coef.push_back((k == 0 ? 1.0 : 2.0) * ik * jk);
            if (k > x + 10 && std::abs(jk) < 1e-17) break;
        }
    }
    const cplx phase = std::polar(1.0, -centre * dt);
    auto scaled_apply = [&](const std::vector<cplx>& v, std::vector<cplx>& out) {
        tc.apply(v, out);
        for (std::size_t i = 0; i < dim; ++i) out[i] = (out[i] - centre * v[i]) / radius;
    };
    auto step = [&] {
        t0 = psi;
        scaled_apply(t0, t1);
        for (std::size_t i = 0; i < dim; ++i) acc[i] = coef[0] * t0[i] + coef[1] * t1[i];
        for (std::size_t k = 2; k < coef.size(); ++k) {
            scaled_apply(t1, t2);
            for (std::size_t i = 0; i < dim; ++i) {
                t2[i] = 2.0 * t2[i] - t0[i];
                acc[i] += coef[k] * t2[i];
            }
            std::swap(t0, t1);
            std::swap(t1, t2);
        }
        for (std::size_t i = 0; i < dim; ++i) psi[i] = phase * acc[i];
    };

    const auto n_steps = static_cast<std::size_t>(std::llround(opt.total_time / dt));
    std::vector<double> avg(tc.n, 0.0);
    double weight_sum = 0.0;
    std::vector<double> prev;
    double prev_t = 0.0;
    res.trusted_until = opt.total_time;
    auto record = [&](double t) {
        auto pr = site_probs(psi);
        double nd = std::abs(norm2(psi) - 1.0);
        double ed = std::abs(expect_h(psi) - e0) / e0;
        res.times.push_back(t);
        res.norm_drift.push_back(nd);
        res.energy_drift.push_back(ed);
        res.max_norm_drift = std::max(res.max_norm_drift, nd);
        res.max_energy_drift = std::max(res.max_energy_drift, ed);
        if (!res.boundary_reached) {
            double edge = 0.0;
            for (std::size_t k = 0; k < tc.tooth_site.size(); ++k)
                for (std::size_t m = tc.j - std::min<std::size_t>(10, tc.j); m < tc.j; ++m)
                    edge += std::norm(psi[tc.n + k * tc.j + m]);
            if (edge > 1e-10) {
                res.boundary_reached = true;
                res.trusted_until = t;
            }
        }
        // trapezoid over [average_from, T] with an optional sin^2 taper
        if (!prev.empty() && t > opt.average_from + 1e-12) {
            const double a = opt.average_from, span = opt.total_time - a;
            auto weight = [&](double x) {
                if (x < a) return 0.0;
                if (!opt.hann) return 1.0;
                double s = std::sin(std::numbers::pi * (x - a) / span);
                return s * s;
            };
            const double wl = weight(prev_t), wr = weight(t), h = t - prev_t;
            for (std::size_t i = 0; i < tc.n; ++i) avg[i] += 0.5 * h * (wl * prev[i] + wr * pr[i]);
            weight_sum += 0.5 * h * (wl + wr);
        }
        if (opt.keep_snapshots) {
            OracleSnapshot snap{t, pr, {}};
            if (opt.dump_full) {
                snap.full_prob.resize(dim);
                for (std::size_t i = 0; i < dim; ++i) snap.full_prob[i] = std::norm(psi[i]);
            }
            res.snapshots.push_back(std::move(snap));
        }
        prev = std::move(pr);
        prev_t = t;
    };
    record(0.0);
    for (std::size_t s = 1; s <= n_steps; ++s) {
        step();
        record(static_cast<double>(s) * dt);
    }
    res.time_average.assign(tc.n, 0.0);
    if (weight_sum > 0.0)
        for (std::size_t i = 0; i < tc.n; ++i) res.time_average[i] = avg[i] / weight_sum;
    return res;
}

}  // namespace combwalk
