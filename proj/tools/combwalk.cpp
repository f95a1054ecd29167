// combwalk: batch front end. Every leaf subcommand writes its tables to
// --out-dir as <stem>[_part].csv (or .json) next to <stem>.manifest.json.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "cli_support.hpp"
#include "combwalk/acceptance.hpp"
#include "combwalk/boundstates.hpp"
#include "combwalk/chainspec.hpp"
#include "combwalk/diffusion.hpp"
#include "combwalk/errors.hpp"
#include "combwalk/riccati.hpp"
#include "combwalk/rng.hpp"
#include "combwalk/smatrix.hpp"

using namespace combwalk;
using namespace combwalk::cli;

namespace {

using Leaves = std::vector<std::unique_ptr<Leaf>>;

Leaf& make_leaf(Leaves& leaves, CLI::App& parent, std::vector<std::string> path, const std::string& help) {
    auto leaf = std::make_unique<Leaf>();
    leaf->app = parent.add_subcommand(path.back(), help);
    leaf->path = std::move(path);
    leaves.push_back(std::move(leaf));
    return *leaves.back();
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 0) throw UsageError("--steps must be positive");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

// A single comb, either given literally or sampled from the seed.
struct CombInput {
    std::string occupancy;
    double p = 0.5;
    std::size_t n_sites = 32;
    std::string boundary = "open";

    void add(Leaf& l) {
        l.add("occupancy", occupancy, "0/1 string, 1 = tooth; overrides sampling");
        l.add("p", p, "hole probability")->check(CLI::Range(0.0, 1.0));
        l.add("n-sites", n_sites, "spine sites")->check(CLI::PositiveNumber);
        l.add("boundary", boundary, "open or periodic")->check(CLI::IsMember({"open", "periodic"}));
    }
    CombConfig build(std::uint64_t seed) const {
        Boundary b = boundary_from_string(boundary);
        return occupancy.empty() ? sample_comb(p, n_sites, b, seed) : comb_from_string(occupancy, b);
    }
};

void describe_comb(RunContext& ctx, const CombConfig& c) {
    ctx.summary()["occupancy"] = c.occupancy();
    ctx.summary()["occupancy_digest"] = occupancy_digest(c);
}

Table riccati_table(const char* xname) {
    return Table{{xname, "p", "gamma_bar", "stderr_gamma", "eta_bar", "stderr_eta", "n_iter", "seed"}, {}};
}

void riccati_row(Table& t, double x, double p, const RiccatiEstimate& r) {
    t.add({x, p, r.gamma_bar, r.stderr_gamma, r.eta_bar, r.stderr_eta, i64(r.n_iter),
           static_cast<std::int64_t>(r.seed)});
}

void add_comb(Leaves& leaves, CLI::App& app) {
    struct S {
        double p = 0.5;
        std::size_t n_sites = 64, samples = 10, max_len = 0;
        std::string boundary = "open";
    };
    auto s = std::make_shared<S>();
    Leaf& l = make_leaf(leaves, app, {"comb"}, "sample a comb ensemble");
    l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
    l.add("n-sites", s->n_sites, "spine sites")->check(CLI::PositiveNumber);
    l.add("samples", s->samples, "ensemble size")->check(CLI::PositiveNumber);
    l.add("boundary", s->boundary, "open or periodic")->check(CLI::IsMember({"open", "periodic"}));
    l.add("max-len", s->max_len, "string lengths for density statistics (0 = skip)");
    l.add_common();
    l.run = [s](RunContext& ctx) {
        const auto& c = ctx.common();
        Table t{{"sample", "seed", "n_teeth", "n_holes", "n_t_odd", "generic", "occupancy_digest", "occupancy"}, {}};
        std::uint64_t ens = 0xcbf29ce484222325ULL;
        for (std::size_t i = 0; i < s->samples; ++i) {
            std::uint64_t seed = derive_seed(c.seed, i);
            CombConfig comb = sample_comb(s->p, s->n_sites, boundary_from_string(s->boundary), seed);
            std::uint64_t dg = occupancy_digest(comb);
            ens = (ens ^ dg) * 0x100000001b3ULL;
            t.add({i64(i), std::to_string(seed), i64(comb.n_teeth()), i64(comb.n_holes()),
                   i64(run_lengths(comb).n_t_odd), i64(classify_chain(comb).is_generic), std::to_string(dg),
                   comb.occupancy()});
        }
        ctx.write(t);
        ctx.summary()["ensemble"] = {{"p", s->p},           {"n_sites", s->n_sites},  {"boundary", s->boundary},
                                     {"master_seed", c.seed}, {"n_samples", s->samples}, {"occupancy_digest", ens}};
        if (s->max_len > 0) {
            auto d = string_density_stats(s->p, s->n_sites, s->samples, c.seed, s->max_len, c.threads);
            Table st{{"kind", "length", "mean", "stderr", "exact"}, {}};
            for (std::size_t k = 0; k < d.hole.size(); ++k)
                st.add({"hole", i64(k + 1), d.hole[k].mean, d.hole[k].error, hole_string_density(s->p, k + 1)});
            for (std::size_t k = 0; k < d.tooth.size(); ++k)
                st.add({"tooth", i64(k + 1), d.tooth[k].mean, d.tooth[k].error, tooth_string_density(s->p, k + 1)});
            st.add({"tooth_odd", i64(0), d.tooth_odd.mean, d.tooth_odd.error, odd_tooth_string_density(s->p)});
            ctx.write(st, "strings");
        }
    };
}

void add_spectrum(Leaves& leaves, CLI::App& app) {
    struct S {
        CombInput comb;
        double v_min = -8.0, v_max = 8.0;
        std::size_t v_steps = 161;
    };
    auto s = std::make_shared<S>();
    Leaf& l = make_leaf(leaves, app, {"spectrum"}, "spectral flow of the binary chain");
    s->comb.add(l);
    l.add("v-min", s->v_min, "smallest V");
    l.add("v-max", s->v_max, "largest V");
    l.add("v-steps", s->v_steps, "grid points")->check(CLI::PositiveNumber);
    l.add_common();
    l.run = [s](RunContext& ctx) {
        CombConfig c = s->comb.build(ctx.common().seed);
        describe_comb(ctx, c);
        auto grid = linspace(s->v_min, s->v_max, s->v_steps);
        auto f = spectral_flow(c, grid, ctx.common().threads);
        Table t{{"V"}, {}};
        for (std::size_t a = 0; a < c.n_sites; ++a) t.columns.push_back("E_" + std::to_string(a + 1));
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<Cell> row{grid[g]};
            for (double e : f.levels[g]) row.emplace_back(e);
            t.add(std::move(row));
        }
        ctx.write(t, "flow");
        auto rep = lemma_invariant_checks(c, grid);
        Table lt{{"check", "detail"}, {}};
        lt.add({"total", std::to_string(rep.checks)});
        for (const auto& f2 : rep.failures) lt.add({"failure", f2});
        ctx.write(lt, "lemmas");
        ctx.summary()["lemma_checks"] = rep.checks;
        ctx.summary()["lemma_failures"] = rep.failures.size();
        ctx.summary()["near_crossings"] = f.near_crossings.size();
        ctx.summary()["n_e_gt4_formula"] = n_e_gt4_formula(c);
        if (!rep.ok()) throw ConsistencyError(std::to_string(rep.failures.size()) + " lemma checks failed");
    };
}

void add_bound(Leaves& leaves, CLI::App& app) {
    struct S {
        CombInput comb;
    };
    auto s = std::make_shared<S>();
    Leaf& l = make_leaf(leaves, app, {"bound"}, "E > 4 bound states");
    s->comb.add(l);
    l.add_common();
    l.run = [s](RunContext& ctx) {
        CombConfig c = s->comb.build(ctx.common().seed);
        describe_comb(ctx, c);
        BoundSolveInfo info;
        auto st = solve_bound_states(c, &info, true);
        Table t{{"index", "sigma", "energy", "norm_sq", "residual"}, {}};
        for (std::size_t i = 0; i < st.size(); ++i)
            t.add({i64(i), st[i].sigma, st[i].energy, st[i].norm_sq, bound_residual(c, st[i])});
        ctx.write(t);
        ctx.summary()["count"] = st.size();
        ctx.summary()["formula_count"] = info.formula_count;
        ctx.summary()["degenerate_clusters"] = info.degenerate_clusters.size();
        ctx.summary()["max_residual"] = info.max_residual;
        if (ctx.common().format == "json") {
            json states = json::array();
            for (const auto& b : st)
                states.push_back({{"sigma", b.sigma}, {"energy", b.energy}, {"norm_sq", b.norm_sq},
                                  {"amplitudes", b.amplitudes}});
            ctx.write_json({{"occupancy", c.occupancy()},
                            {"boundary", to_string(c.boundary)},
                            {"occupancy_digest", occupancy_digest(c)},
                            {"states", states}},
                           "states");
        }
    };
}

void add_smatrix(Leaves& leaves, CLI::App& app) {
    struct S {
        CombInput comb;
        double theta_min = 0.01, theta_max = std::numbers::pi - 0.01;
        std::size_t steps = 50;
        bool dump = false;
    };
    auto s = std::make_shared<S>();
    Leaf& l = make_leaf(leaves, app, {"smatrix"}, "S-matrix residuals over theta");
    s->comb.add(l);
    l.add("theta-min", s->theta_min, "first angle, in (0, pi)");
    l.add("theta-max", s->theta_max, "last angle, in (0, pi)");
    l.add("steps", s->steps, "angles")->check(CLI::PositiveNumber);
    l.flag("dump", s->dump, "also write S (N <= 64) as JSON");
    l.add_common();
    l.run = [s](RunContext& ctx) {
        CombConfig c = s->comb.build(ctx.common().seed);
        describe_comb(ctx, c);
        if (s->dump && c.n_sites > 64) throw UsageError("--dump needs n-sites <= 64");
        Table t{{"theta", "theta_used", "unitarity", "symmetry", "block", "xy_difference", "inverse_conj",
                 "c_consistency", "cond_x"},
                {}};
        json dumps = json::array();
        double worst = 0.0;
        for (double th : linspace(s->theta_min, s->theta_max, s->steps)) {
            auto set = compute_smatrix(c, th);
            auto r = smatrix_residuals(set);
            worst = std::max(worst, r.max());
            t.add({th, set.theta_used, r.unitarity, r.symmetry, r.block, r.xy_difference, r.inverse_conj,
                   r.c_consistency, set.cond_x});
            if (s->dump) {
                json re = json::array(), im = json::array();
                for (Eigen::Index i = 0; i < set.s_full.rows(); ++i) {
                    json rr = json::array(), ii = json::array();
                    for (Eigen::Index j = 0; j < set.s_full.cols(); ++j) {
                        rr.push_back(set.s_full(i, j).real());
                        ii.push_back(set.s_full(i, j).imag());
                    }
                    re.push_back(rr);
                    im.push_back(ii);
                }
                dumps.push_back({{"theta", th}, {"s_full_re", re}, {"s_full_im", im}});
            }
        }
        ctx.write(t);
        if (s->dump) ctx.write_json({{"occupancy", c.occupancy()}, {"matrices", dumps}}, "dump");
        ctx.summary()["max_residual"] = worst;
        if (worst > 1e-9) throw ConsistencyError("S-matrix residual above 1e-9");
    };
}

void add_lyapunov(Leaves& leaves, CLI::App& app) {
    CLI::App* ly = app.add_subcommand("lyapunov", "Riccati Lyapunov exponents");
    ly->require_subcommand(1);
    struct S {
        double p = 0.5, e_min = 4.01, e_max = 16.0 / 3.0, energy = 2.0, v = 3.0;
        double d_min = -3.0, d_max = 3.0;
        std::size_t steps = 50, iters = 100000;
    };
    auto sweep = [&](const std::string& name, const std::string& help, double e_min, double e_max) {
        auto s = std::make_shared<S>();
        s->e_min = e_min;
        s->e_max = e_max;
        Leaf& l = make_leaf(leaves, *ly, {"lyapunov", name}, help);
        l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
        if (name == "phaseshift") {
            l.add("energy", s->energy, "comb energy in (0, 4)");
            l.add("delta-min", s->d_min, "first phase shift");
            l.add("delta-max", s->d_max, "last phase shift");
        } else {
            l.add("e-min", s->e_min, "first energy");
            l.add("e-max", s->e_max, "last energy");
        }
        if (name == "chain") l.add("v", s->v, "potential on teeth");
        l.add("steps", s->steps, "grid points")->check(CLI::PositiveNumber);
        l.add("iters", s->iters, "Riccati iterations per point")->check(CLI::Range(std::size_t{2000}, std::size_t{1} << 40));
        l.add_common();
        l.run = [s, name](RunContext& ctx) {
            // common random numbers across the sweep give smooth curves
            const std::uint64_t seed = ctx.common().seed;
            Table t = riccati_table(name == "phaseshift" ? "delta" : "E");
            if (name == "phaseshift") {
                for (double d : linspace(s->d_min, s->d_max, s->steps))
                    riccati_row(t, d, s->p, lyapunov_phase_shift(s->energy, d, s->p, s->iters, seed));
            } else {
                for (double e : linspace(s->e_min, s->e_max, s->steps)) {
                    RiccatiEstimate r = name == "egt4"      ? lyapunov_egt4(e, s->p, s->iters, seed)
                                        : name == "upsilon" ? lyapunov_upsilon(e, s->p, s->iters, seed)
                                                            : lyapunov_binary_chain(e, s->v, s->p, s->iters, seed);
                    riccati_row(t, e, s->p, r);
                }
            }
            ctx.write(t);
        };
    };
    sweep("egt4", "E > 4 family, energies in (4, 16/3]", 4.01, 16.0 / 3.0);
    sweep("upsilon", "E < 4 Upsilon family, energies in (0, 4)", 0.05, 3.95);
    sweep("phaseshift", "phase-shift family at fixed energy", 0.0, 0.0);
    sweep("chain", "binary chain, chain energies", -3.0, 6.0);
}

void add_idos(Leaves& leaves, CLI::App& app) {
    struct S {
        double p = 0.5, v = 3.0, e_min = -3.0, e_max = 6.0;
        std::size_t steps = 91, iters = 100000, grid = 400;
        std::vector<double> thouless;
    };
    auto s = std::make_shared<S>();
    Leaf& l = make_leaf(leaves, app, {"idos"}, "binary-chain IDOS and Thouless check");
    l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
    l.add("v", s->v, "potential on teeth");
    l.add("e-min", s->e_min, "first chain energy");
    l.add("e-max", s->e_max, "last chain energy");
    l.add("steps", s->steps, "grid points")->check(CLI::PositiveNumber);
    l.add("iters", s->iters, "Riccati iterations per point")->check(CLI::Range(std::size_t{2000}, std::size_t{1} << 40));
    l.add("grid", s->grid, "IDOS grid for the Thouless integral")->check(CLI::Range(10, 100000));
    l.add("thouless", s->thouless, "energies at which to compare gamma with the Thouless integral");
    l.add_common();
    l.run = [s](RunContext& ctx) {
        const auto& c = ctx.common();
        Table t{{"E", "p", "v", "eta_bar", "stderr_eta", "gamma_bar", "stderr_gamma", "n_iter", "seed"}, {}};
        for (double e : linspace(s->e_min, s->e_max, s->steps)) {
            auto r = lyapunov_binary_chain(e, s->v, s->p, s->iters, c.seed);
            t.add({e, s->p, s->v, r.eta_bar, r.stderr_eta, r.gamma_bar, r.stderr_gamma, i64(r.n_iter),
                   static_cast<std::int64_t>(r.seed)});
        }
        ctx.write(t);
        if (!s->thouless.empty()) {
            auto th = thouless_check(s->p, s->v, s->thouless, s->grid, s->iters, c.seed, c.threads);
            Table tt{{"E", "gamma", "stderr_gamma", "thouless", "rel_dev"}, {}};
            for (std::size_t i = 0; i < th.energies.size(); ++i)
                tt.add({th.energies[i], th.gamma[i], th.gamma_err[i], th.thouless[i], th.rel_dev[i]});
            ctx.write(tt, "thouless");
            ctx.summary()["max_rel_dev"] = th.max_rel_dev;
        }
    };
}

void add_scaling(Leaves& leaves, CLI::App& app) {
    CLI::App* sc = app.add_subcommand("scaling", "small-energy scaling");
    sc->require_subcommand(1);
    {
        struct S {
            double p = 0.5, t_min = 1e-4, t_max = 1e-2;
            std::size_t steps = 9, iters = 1000000;
        };
        auto s = std::make_shared<S>();
        Leaf& l = make_leaf(leaves, *sc, {"scaling", "small-e"}, "gamma / sqrt(theta) as theta -> 0");
        l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
        l.add("theta-min", s->t_min, "smallest theta")->check(CLI::PositiveNumber);
        l.add("theta-max", s->t_max, "largest theta")->check(CLI::PositiveNumber);
        l.add("steps", s->steps, "log-spaced angles")->check(CLI::PositiveNumber);
        l.add("iters", s->iters, "iterations per angle")->check(CLI::Range(std::size_t{2000}, std::size_t{1} << 40));
        l.add_common();
        l.run = [s](RunContext& ctx) {
            std::vector<double> th;
            for (double x : linspace(std::log(s->t_min), std::log(s->t_max), s->steps)) th.push_back(std::exp(x));
            auto f = small_e_scaling(s->p, th, s->iters, ctx.common().seed, ctx.common().threads);
            Table t{{"theta", "ratio", "stderr_ratio"}, {}};
            for (std::size_t i = 0; i < f.thetas.size(); ++i) t.add({f.thetas[i], f.ratio[i], f.ratio_err[i]});
            ctx.write(t);
            ctx.summary() = {{"prefactor", f.prefactor},
                             {"stderr_prefactor", f.stderr_prefactor},
                             {"target", f.target},
                             {"rel_dev", f.rel_dev}};
        };
    }
    {
        struct S {
            double p = 0.5, dt = 1e-3;
            std::size_t n_steps = 2000000;
        };
        auto s = std::make_shared<S>();
        Leaf& l = make_leaf(leaves, *sc, {"scaling", "kappa"}, "Langevin process of the small-E expansion");
        l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
        l.add("dt", s->dt, "time step")->check(CLI::PositiveNumber);
        l.add("n-steps", s->n_steps, "Euler-Maruyama steps")->check(CLI::PositiveNumber);
        l.add_common();
        l.run = [s](RunContext& ctx) {
            auto k = simulate_kappa(s->p, s->dt, s->n_steps, ctx.common().seed);
            Table t{{"quantity", "empirical", "stderr", "exact"}, {}};
            t.add({"mean_re", k.mean[0], k.mean_err[0], 0.0});
            t.add({"mean_im", k.mean[1], k.mean_err[1], 0.0});
            const char* names[2][2] = {{"cov_re_re", "cov_re_im"}, {"cov_im_re", "cov_im_im"}};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) t.add({names[a][b], k.cov[a][b], kNaN, k.cov_exact[a][b]});
            t.add({"fixed_point_distance", k.fixed_point_distance, kNaN, 0.0});
            ctx.write(t);
        };
    }
}

void add_diffusion(Leaves& leaves, CLI::App& app) {
    CLI::App* di = app.add_subcommand("diffusion", "localization and escape probabilities");
    di->require_subcommand(1);
    {
        struct S {
            double p = 0.5;
            std::size_t length = 500, samples = 100;
        };
        auto s = std::make_shared<S>();
        Leaf& l = make_leaf(leaves, *di, {"diffusion", "ensemble"}, "P^loc histograms over periodic combs");
        l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
        l.add("length", s->length, "comb length")->check(CLI::PositiveNumber);
        l.add("samples", s->samples, "combs")->check(CLI::PositiveNumber);
        l.add_common();
        l.run = [s](RunContext& ctx) {
            auto e = ensemble_ploc(s->p, s->length, s->samples, ctx.common().seed, ctx.common().threads);
            Table t{{"bin_low", "bin_high", "all", "tooth_start", "hole_start"}, {}};
            const double w = 1.0 / static_cast<double>(e.histogram.size());
            for (std::size_t b = 0; b < e.histogram.size(); ++b)
                t.add({w * static_cast<double>(b), w * static_cast<double>(b + 1), i64(e.histogram[b]),
                       i64(e.hist_tooth[b]), i64(e.hist_hole[b])});
            ctx.write(t);
            ctx.summary() = {{"mean", e.mean},         {"stderr", e.stderr_mean}, {"bound", p_loc_bound(s->p)},
                             {"gap", e.gap},           {"gap_low", e.gap_low},    {"gap_high", e.gap_high},
                             {"tooth_min", e.tooth_min}, {"hole_max", e.hole_max}};
        };
    }
    {
        struct S {
            double p = 0.25, tol = 1e-12;
            std::size_t length = 400, samples = 20, starts = 4, d_min = 20, d_max = 100, d_step = 10;
        };
        auto s = std::make_shared<S>();
        Leaf& l = make_leaf(leaves, *di, {"diffusion", "escape"}, "ensemble-mean p_esc(d) and power-law fit");
        l.add("p", s->p, "hole probability")->check(CLI::Range(0.0, 1.0));
        l.add("length", s->length, "comb length")->check(CLI::PositiveNumber);
        l.add("samples", s->samples, "combs")->check(CLI::PositiveNumber);
        l.add("starts", s->starts, "start sites per comb")->check(CLI::PositiveNumber);
        l.add("d-min", s->d_min, "smallest distance")->check(CLI::PositiveNumber);
        l.add("d-max", s->d_max, "largest distance")->check(CLI::PositiveNumber);
        l.add("d-step", s->d_step, "distance step")->check(CLI::PositiveNumber);
        l.add("tol", s->tol, "absolute quadrature tolerance")->check(CLI::PositiveNumber);
        l.add_common();
        l.run = [s](RunContext& ctx) {
            std::vector<std::size_t> ds;
            for (std::size_t d = s->d_min; d <= s->d_max; d += s->d_step) ds.push_back(d);
            auto f = escape_asymptotics(s->p, s->length, ds, s->samples, ctx.common().seed, s->starts,
                                        ctx.common().threads, s->tol);
            Table t{{"d", "mean_p_esc", "stderr"}, {}};
            for (std::size_t i = 0; i < ds.size(); ++i) t.add({i64(ds[i]), f.mean_p_esc[i], f.stderr_p_esc[i]});
            ctx.write(t);
            ctx.summary() = {{"exponent", f.exponent},       {"exponent_err", f.exponent_err},
                             {"coefficient", f.coefficient}, {"coefficient_err", f.coefficient_err},
                             {"target_coefficient", f.target_coefficient}};
        };
    }
    {
        struct S {
            CombInput comb;
            std::size_t n0 = 0;
            double tol = 1e-9;
        };
        auto s = std::make_shared<S>();
        Leaf& l = make_leaf(leaves, *di, {"diffusion", "profile"}, "P^loc profile and escape per tooth for one comb");
        s->comb.add(l);
        l.add("n0", s->n0, "start site");
        l.add("tol", s->tol, "absolute quadrature tolerance")->check(CLI::PositiveNumber);
        l.add_common();
        l.run = [s](RunContext& ctx) {
            CombConfig c = s->comb.build(ctx.common().seed);
            describe_comb(ctx, c);
            QuadratureSpec q;
            q.abs_tol = s->tol;
            auto rep = diffusion_report(c, s->n0, q);
            auto st = solve_bound_states(c);
            auto env = q_envelope(c, st, s->n0);
            Table t{{"n", "tooth", "profile", "q_envelope", "p_esc"}, {}};
            for (std::size_t n = 0; n < c.n_sites; ++n) {
                auto it = rep.p_esc_by_tooth.find(n);
                t.add({i64(n), i64(c.tooth(n)), rep.profile[n], env[n],
                       it == rep.p_esc_by_tooth.end() ? 0.0 : it->second});
            }
            ctx.write(t);
            ctx.summary()["p_loc"] = rep.p_loc;
            ctx.summary()["completeness_residual"] = rep.completeness_residual;
            ctx.summary()["quadrature_error"] = rep.quadrature_error;
            if (std::abs(rep.completeness_residual) > 1e-6)
                throw ConsistencyError("p_loc + sum p_esc differs from 1 by more than 1e-6");
        };
    }
}

void add_oracle(Leaves& leaves, CLI::App& app) {
    struct S {
        CombInput comb;
        std::size_t n0 = 20, tooth_length = 0, window = 1;
        double time = 500.0, dt = 0.5;
        bool uniform = false, dump = false;
    };
    auto s = std::make_shared<S>();
    s->comb.n_sites = 40;
    Leaf& l = make_leaf(leaves, app, {"oracle"}, "direct time evolution against the bound-state profile");
    s->comb.add(l);
    l.add("n0", s->n0, "start site");
    l.add("time", s->time, "total time T")->check(CLI::PositiveNumber);
    l.add("dt", s->dt, "sampling step")->check(CLI::PositiveNumber);
    l.add("tooth-length", s->tooth_length, "sites kept per tooth (0 = 4 T + 100)");
    l.add("window", s->window, "tooth sites counted with the spine site");
    l.flag("uniform", s->uniform, "uniform instead of sin^2 time weights");
    l.flag("dump", s->dump, "write (t, n, j, |psi|^2) for every sample");
    l.add_common();
    l.run = [s](RunContext& ctx) {
        CombConfig c = s->comb.build(ctx.common().seed);
        describe_comb(ctx, c);
        OracleOptions o;
        o.total_time = s->time;
        o.sample_dt = s->dt;
        o.tooth_length = s->tooth_length;
        o.window = s->window;
        o.hann = !s->uniform;
        o.keep_snapshots = o.dump_full = s->dump;
        auto r = evolve_oracle(c, s->n0, o);
        auto st = solve_bound_states(c);
        auto pred = p_loc_profile_window(c, st, s->n0, s->window);
        Table t{{"n", "tooth", "time_average", "predicted"}, {}};
        double worst = 0.0;
        for (std::size_t n = 0; n < c.n_sites; ++n) {
            t.add({i64(n), i64(c.tooth(n)), r.time_average[n], pred[n]});
            if (pred[n] > 1e-4) worst = std::max(worst, std::abs(r.time_average[n] / pred[n] - 1.0));
        }
        ctx.write(t);
        ctx.summary() = {{"worst_rel_dev", worst},
                         {"max_norm_drift", r.max_norm_drift},
                         {"max_energy_drift", r.max_energy_drift},
                         {"boundary_reached", r.boundary_reached},
                         {"trusted_until", r.trusted_until},
                         {"tooth_length", r.tooth_length}};
        if (s->dump) {
            Table d{{"t", "n", "j", "prob"}, {}};
            std::vector<std::size_t> teeth;
            for (std::size_t n = 0; n < c.n_sites; ++n)
                if (c.tooth(n)) teeth.push_back(n);
            for (const auto& snap : r.snapshots) {
                for (std::size_t n = 0; n < c.n_sites; ++n)
                    if (snap.full_prob[n] > 1e-30) d.add({snap.time, i64(n), i64(0), snap.full_prob[n]});
                for (std::size_t k = 0; k < teeth.size(); ++k)
                    for (std::size_t j = 0; j < r.tooth_length; ++j) {
                        double pr = snap.full_prob[c.n_sites + k * r.tooth_length + j];
                        if (pr > 1e-30) d.add({snap.time, i64(teeth[k]), i64(j + 1), pr});
                    }
            }
            ctx.write(d, "dump");
        }
    };
}

void add_verify(Leaves& leaves, CLI::App& app) {
    CLI::App* ve = app.add_subcommand("verify", "invariant and acceptance checks");
    ve->require_subcommand(1);
    auto make = [&](const std::string& name, const std::string& help, std::vector<int> ids) {
        struct S {
            bool quick = false;
            std::vector<int> ids;
        };
        auto s = std::make_shared<S>();
        s->ids = std::move(ids);
        Leaf& l = make_leaf(leaves, *ve, {"verify", name}, help);
        l.flag("quick", s->quick, "small sizes");
        if (name == "criterion") l.add("id", s->ids, "criterion numbers 1..13")->required();
        l.add_common();
        l.run = [s](RunContext& ctx) {
            AcceptanceOptions o;
            o.quick = s->quick;
            o.threads = ctx.common().threads;
            o.seed = ctx.common().seed;
            Table t{{"id", "name", "pass", "seconds", "detail"}, {}};
            int failed = 0;
            for (int id : s->ids) {
                if (id < 1 || id > kCriterionCount) throw UsageError("criterion ids are 1..13");
                auto r = run_criterion(id, o);
                std::printf("%s\n", format_result(r).c_str());
                std::fflush(stdout);
                failed += !r.pass;
                t.add({std::int64_t{id}, r.name, std::int64_t{r.pass}, r.seconds, r.detail});
            }
            ctx.write(t);
            ctx.summary()["failed"] = failed;
            if (failed) throw ConsistencyError(std::to_string(failed) + " checks failed");
        };
    };
    // the invariant suite; 9 and 10 are asymptotic claims, run them with `verify criterion`
    make("all", "run the invariant checks", {1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13});
    make("criterion", "run selected acceptance criteria", {});
}

// Pulls "--from-manifest FILE" out of argv and returns the manifest, with
// its subcommand path spliced in front of the remaining arguments.
json take_manifest(std::vector<std::string>& args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string file;
        if (args[i] == "--from-manifest" && i + 1 < args.size())
            file = args[i + 1];
        else if (args[i].rfind("--from-manifest=", 0) == 0)
            file = args[i].substr(16);
        else
            continue;
        args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(args[i] == "--from-manifest" ? i + 2 : i + 1));
        std::ifstream in(file);
        if (!in) throw UsageError("cannot read manifest " + file);
        json m = json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.contains("subcommand") || !m.contains("parameters"))
            throw UsageError(file + " is not a run manifest");
        auto path = m["subcommand"].get<std::vector<std::string>>();
        args.insert(args.begin() + 1, path.begin(), path.end());
        return m["parameters"];
    }
    return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"combwalk: random comb graphs, bound states, scattering, Lyapunov exponents and diffusion"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config;
    app.add_option("--config", config, "flat JSON object of flag values (flags take precedence)");
    Leaves leaves;
    add_comb(leaves, app);
    add_spectrum(leaves, app);
    add_bound(leaves, app);
    add_smatrix(leaves, app);
    add_lyapunov(leaves, app);
    add_idos(leaves, app);
    add_scaling(leaves, app);
    add_diffusion(leaves, app);
    add_oracle(leaves, app);
    add_verify(leaves, app);

    try {
        std::vector<std::string> args(argv, argv + argc);
        json manifest_params = take_manifest(args);
        std::vector<const char*> cargs;
        for (const auto& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }
        Leaf* leaf = nullptr;
        for (auto& l : leaves)
            if (l->app->parsed()) leaf = l.get();
        if (!leaf) {
            std::cerr << app.help();
            return 2;
        }
        // flags > config file > manifest > defaults: later sources overwrite
        if (!manifest_params.is_null()) leaf->apply(manifest_params, "manifest");
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw UsageError("cannot read config " + config);
            json cfg = json::parse(in, nullptr, false);
            if (cfg.is_discarded()) throw UsageError(config + " is not valid JSON");
            leaf->apply(cfg, config);
        }
        RunContext ctx(*leaf);
        try {
            leaf->run(ctx);
        } catch (const ConsistencyError&) {
            ctx.finish();
            throw;
        }
        ctx.finish();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const ConsistencyError& e) {
        std::cerr << "consistency failure: " << e.what() << '\n';
        return 3;
    } catch (const DegeneracyError& e) {
        std::cerr << "consistency failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
