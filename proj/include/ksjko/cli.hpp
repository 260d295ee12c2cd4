#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ksjko/diagnostics.hpp"
#include "ksjko/energetics.hpp"
#include "ksjko/equilibrium.hpp"
#include "ksjko/io/config.hpp"
#include "ksjko/io/output.hpp"
#include "ksjko/io/setup.hpp"
#include "ksjko/io/svg.hpp"
#include "ksjko/jko.hpp"
#include "ksjko/random_states.hpp"
#include "ksjko/reference_fd.hpp"

namespace ksjko::cli {

enum ExitCode : int { Ok = 0, SolverFailure = 1, ConfigFailure = 2 };

namespace fs = std::filesystem;
using io::Json;

struct Context {
    io::RunSpec spec;
    fs::path out;
    bool quiet = false;
    std::ostream* err = &std::cerr;

    void log(const std::string& message) const {
        if (!quiet) *err << "ksjko: " << message << '\n';
    }
};

/// Solver-side failure that should still leave a summary behind.
struct RunReport {
    int code = Ok;
    std::string status = "ok";
};

namespace detail {

inline std::optional<DecayFit> try_fit(const std::vector<double>& t, const std::vector<double>& y) {
    try {
        return fit_decay_rate(t, y);
    } catch (const Error&) {
        return std::nullopt;
    }
}

inline Json fit_json(const std::optional<DecayFit>& fit) { return fit ? io::to_json(*fit) : Json(nullptr); }

inline Json equilibrium_json(const EquilibriumPair& eq, const ModelParams& p) {
    const auto r = stationarity_residual(eq, p);
    Json j;
    j["iterations"] = eq.iterations;
    j["picard_residual"] = eq.residual;
    j["r_u"] = r.r_u;
    j["r_v"] = r.r_v;
    j["U_eps"] = eq.U_eps;
    j["lambda_eps"] = perturbed_potential(p, eq).lambda_eps;
    j["H_inf"] = entropy(eq.state(), p).H;
    j["mass"] = gridops::integrate(eq.grid(), eq.u_inf.values);
    j["mean"] = mean(eq.u_quantiles);
    j["variance"] = variance(eq.u_quantiles);
    return j;
}

/// Largest H(n) + dist^2 / (2 tau) - H(n-1) over the run.
inline double energy_inequality_violation(const JkoTrajectory& traj) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        const double d = traj.steps[n].step_dist;
        worst = std::max(worst, traj.energies[n + 1].H + d * d / (2.0 * traj.tau) - traj.energies[n].H);
    }
    return traj.steps.empty() ? 0.0 : worst;
}

inline Json solver_json(const JkoTrajectory& traj) {
    int max_alt = 0, kinks = 0;
    double total_alt = 0.0, max_grad = 0.0;
    double min_decrease = std::numeric_limits<double>::infinity();
    for (const auto& s : traj.steps) {
        max_alt = std::max(max_alt, s.alternations);
        total_alt += s.alternations;
        max_grad = std::max(max_grad, s.grad_norm);
        kinks += s.at_kink ? 1 : 0;
        min_decrease = std::min(min_decrease, s.penalized_decrease);
    }
    Json j;
    j["steps"] = traj.steps.size();
    j["max_alternations"] = max_alt;
    j["mean_alternations"] = traj.steps.empty() ? 0.0 : total_alt / static_cast<double>(traj.steps.size());
    j["max_grad_norm"] = max_grad;
    j["kink_steps"] = kinks;
    j["min_penalized_decrease"] = io::number(min_decrease);
    j["failure"] = traj.failure ? Json(*traj.failure) : Json(nullptr);
    return j;
}

inline std::vector<std::size_t> spread(const std::vector<std::size_t>& idx, std::size_t at_most) {
    if (idx.size() <= at_most) return idx;
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < at_most; ++k) out.push_back(idx[k * (idx.size() - 1) / (at_most - 1)]);
    return out;
}

inline void snapshot_plots(const fs::path& dir, const JkoTrajectory& traj, const ModelParams& p,
                           const std::vector<std::size_t>& written) {
    const Grid g = p.grid();
    const auto x = g.nodes();
    io::LineChart uc{"density snapshots", "x", "u", false, {}};
    io::LineChart vc{"field snapshots", "x", "v", false, {}};
    for (std::size_t n : spread(written, 8)) {
        const std::string name = "t = " + io::detail::short_number(traj.times[n]);
        uc.series.push_back({name, x, quantiles_to_density(traj.states[n].u, g).values});
        vc.series.push_back({name, x, traj.states[n].v.values});
    }
    io::write_svg(dir / "u_snapshots.svg", uc);
    io::write_svg(dir / "v_snapshots.svg", vc);
}

struct EvolveResult {
    ModelParams params;
    std::optional<EquilibriumPair> eq;
    JkoTrajectory traj;
};

inline EquilibriumPair equilibrium_for(const Context& ctx, const ModelParams& p) {
    ctx.log("solving for the equilibrium (chi = " + io::format_number(p.chi) + ")");
    return solve_equilibrium(p, ctx.spec.equilibrium.tol, ctx.spec.equilibrium.max_iters);
}

inline EvolveResult run_evolution(const Context& ctx, const ModelParams& p, const State& s0, bool need_eq) {
    EvolveResult r{p, std::nullopt, {}};
    if (p.kappa > 0.0) {
        r.eq = equilibrium_for(ctx, p);
    } else if (need_eq) {
        throw Error(ErrorKind::InvalidArgument, "the equilibrium requires kappa > 0");
    }
    ctx.log("running " + std::to_string(static_cast<long long>(std::ceil(ctx.spec.T / ctx.spec.tau - 1e-9))) +
            " JKO steps");
    r.traj = evolve(s0, ctx.spec.tau, ctx.spec.T, p, ctx.spec.solver, r.eq ? &*r.eq : nullptr);
    return r;
}

/// Timeseries, snapshots, plots and the common part of the summary.
inline Json write_trajectory(const Context& ctx, const EvolveResult& r, const fs::path& dir, bool snapshots) {
    const auto& traj = r.traj;
    const EquilibriumPair* eq = r.eq ? &*r.eq : nullptr;
    const auto columns = io::timeseries_columns(traj, eq, r.params);
    io::write_csv(dir / "timeseries.csv", io::timeseries_header(), columns);
    std::vector<std::size_t> written;
    if (snapshots) written = io::write_snapshots(dir, traj, r.params, ctx.spec.output.stride);

    Json j;
    j["steps"] = traj.steps.size();
    j["final_time"] = traj.times.back();
    if (eq != nullptr) j["equilibrium"] = equilibrium_json(*eq, r.params);

    std::vector<double> mean_gap, var_gap;
    const double m_inf = eq != nullptr ? mean(eq->u_quantiles) : 0.0;
    const double var_inf = eq != nullptr ? variance(eq->u_quantiles) : std::numeric_limits<double>::quiet_NaN();
    for (const auto& s : traj.states) {
        mean_gap.push_back(std::abs(mean(s.u) - m_inf));
        var_gap.push_back(std::abs(variance(s.u) - var_inf));
    }
    Json rates;
    rates["L"] = eq != nullptr ? fit_json(try_fit(traj.times, columns[2])) : Json(nullptr);
    rates["mean"] = fit_json(try_fit(traj.times, mean_gap));
    rates["variance"] = eq != nullptr ? fit_json(try_fit(traj.times, var_gap)) : Json(nullptr);
    j["rates"] = rates;
    j["solver"] = solver_json(traj);

    double mass_dev = 0.0;
    for (double m : columns[10]) mass_dev = std::max(mass_dev, std::abs(m - 1.0));
    const double violation = energy_inequality_violation(traj);
    Json inv;
    inv["energy_inequality_max_violation"] = violation;
    inv["energy_inequality_ok"] = violation <= ctx.spec.solver.energy_decrease_tol;
    inv["mass_max_deviation"] = mass_dev;
    j["invariants"] = inv;
    const auto& last = traj.states.back();
    j["final"] = {{"H", traj.energies.back().H},
                  {"L", eq != nullptr ? io::number(traj.lyapunov.back().L) : Json(nullptr)},
                  {"mean", mean(last.u)},
                  {"variance", variance(last.u)}};

    if (ctx.spec.output.plots) {
        const fs::path plots = dir / "plots";
        io::ensure_directory(plots);
        if (eq != nullptr) {
            io::LineChart lc{"Lyapunov functional", "t", "value", true, {}};
            lc.series.push_back({"L", columns[0], columns[2]});
            lc.series.push_back({"L_u", columns[0], columns[3]});
            lc.series.push_back({"L_v", columns[0], columns[4]});
            io::write_svg(plots / "lyapunov.svg", lc);
        }
        io::LineChart hc{"entropy", "t", "H", false, {{"H", columns[0], columns[1]}}};
        io::write_svg(plots / "entropy.svg", hc);
        if (snapshots) snapshot_plots(plots, traj, r.params, written);
    }
    return j;
}

inline RunReport trajectory_status(const Context& ctx, const JkoTrajectory& traj, const Json& summary) {
    if (traj.failure) {
        ctx.log("solver failure: " + *traj.failure);
        return {SolverFailure, "solver-failure"};
    }
    if (!summary["invariants"]["energy_inequality_ok"].get<bool>()) {
        ctx.log("energy inequality violated");
        return {SolverFailure, "invariant-violated"};
    }
    return {};
}

inline Json base_summary(const Context& ctx, const char* command) {
    Json j;
    j["command"] = command;
    j["status"] = "ok";
    j["config"] = io::to_json(ctx.spec);
    return j;
}

inline int finish(const Context& ctx, Json& summary, const RunReport& report) {
    summary["status"] = report.status;
    io::write_json(ctx.out / "summary.json", summary);
    ctx.log("wrote " + (ctx.out / "summary.json").string());
    return report.code;
}

}  // namespace detail

inline int cmd_evolve(const Context& ctx, const ModelParams& p, const State& s0) {
    auto r = detail::run_evolution(ctx, p, s0, false);
    auto summary = detail::base_summary(ctx, "evolve");
    summary.update(detail::write_trajectory(ctx, r, ctx.out, true));
    return detail::finish(ctx, summary, detail::trajectory_status(ctx, r.traj, summary));
}

inline int cmd_equilibrium(const Context& ctx, const ModelParams& p) {
    const auto eq = detail::equilibrium_for(ctx, p);
    io::write_field(ctx.out / "u_inf.csv", eq.u_inf, "u");
    io::write_field(ctx.out / "v_inf.csv", eq.v_inf, "v");
    auto summary = detail::base_summary(ctx, "equilibrium");
    summary["equilibrium"] = detail::equilibrium_json(eq, p);
    summary["residual_history"] = eq.residual_history;
    if (ctx.spec.output.plots) {
        io::ensure_directory(ctx.out / "plots");
        const auto x = eq.grid().nodes();
        io::LineChart c{"equilibrium", "x", "value", false, {{"u_inf", x, eq.u_inf.values}, {"v_inf", x, eq.v_inf.values}}};
        io::write_svg(ctx.out / "plots" / "equilibrium.svg", c);
    }
    return detail::finish(ctx, summary, {});
}

inline int cmd_compare(const Context& ctx, const ModelParams& p, const State& s0) {
    const auto& spec = ctx.spec;
    const double ratio = spec.tau / spec.fd.dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw Error(ErrorKind::ConfigError, "'fd.dt': tau must be an integer multiple of fd.dt");
    }
    auto r = detail::run_evolution(ctx, p, s0, true);
    const ModelParams pf = io::fd_params(spec, p);
    auto fcfg = io::fd_config(spec);
    fcfg.record_stride = static_cast<std::size_t>(rounded);
    ctx.log("running the finite-difference oracle on " + std::to_string(pf.n_cells) + " cells");
    const auto fd = fd_evolve(io::initial_density(spec, pf.grid()), io::initial_field(spec, pf.grid()), fcfg, spec.T, pf);

    auto summary = detail::base_summary(ctx, "compare");
    summary.update(detail::write_trajectory(ctx, r, ctx.out, false));
    Json fdj;
    fdj["n_cells"] = pf.n_cells;
    fdj["dt"] = fcfg.dt;
    fdj["max_mass_drift"] = fd.max_mass_drift;
    fdj["failure"] = fd.failure ? Json(*fd.failure) : Json(nullptr);
    summary["fd"] = fdj;
    RunReport report = detail::trajectory_status(ctx, r.traj, summary);
    if (fd.failure) {
        ctx.log("finite-difference failure: " + *fd.failure);
        report = {SolverFailure, "solver-failure"};
    }
    if (!r.traj.failure && !fd.failure) {
        const auto cmp = compare_trajectories(r.traj, fd, *r.eq);
        io::write_csv(ctx.out / "comparison.csv", {"t", "W2", "u_L1", "v_L2", "v_H1", "jko_W2_to_eq", "fd_W2_to_eq"},
                      {cmp.times, cmp.w2, cmp.u_l1, cmp.v_l2, cmp.v_h1, cmp.jko_w2_to_eq, cmp.fd_w2_to_eq});
        summary["comparison"] = {{"sup_W2", cmp.sup_w2},
                                 {"sup_u_L1", cmp.sup_u_l1},
                                 {"sup_v_L2", cmp.sup_v_l2},
                                 {"sup_v_H1", cmp.sup_v_h1}};
        if (spec.output.plots) {
            io::LineChart c{"JKO vs finite differences", "t", "gap", false,
                            {{"W2", cmp.times, cmp.w2}, {"u L1", cmp.times, cmp.u_l1}, {"v L2", cmp.times, cmp.v_l2}}};
            io::write_svg(ctx.out / "plots" / "comparison.svg", c);
        }
    }
    return detail::finish(ctx, summary, report);
}

namespace detail {

inline Json certificate_json(const Theorem2Certificate& c) {
    Json j;
    j["fit"] = io::to_json(c.fit);
    j["rate_L"] = c.rate_L;
    j["rate"] = c.rate;
    j["reference_rate"] = c.reference_rate;
    j["rate_over_reference"] = c.reference_rate > 0.0 ? io::number(c.rate / c.reference_rate) : Json(nullptr);
    j["lambda_eps"] = c.lambda_eps;
    j["entropy_gap"] = c.entropy_gap;
    j["prefactor"] = c.prefactor;
    j["envelope_band"] = c.envelope_band;
    j["max_envelope_ratio"] = c.max_envelope_ratio;
    j["envelope_satisfied"] = c.envelope_satisfied;
    j["L_strictly_decreasing"] = c.L_strictly_decreasing;
    return j;
}

}  // namespace detail

inline int cmd_decay_rate(const Context& ctx, const ModelParams& p, const State& s0) {
    auto r = detail::run_evolution(ctx, p, s0, true);
    auto summary = detail::base_summary(ctx, "decay-rate");
    summary.update(detail::write_trajectory(ctx, r, ctx.out, false));
    RunReport report = detail::trajectory_status(ctx, r.traj, summary);
    if (report.code == Ok) {
        const auto c = theorem2_certificate(r.traj, *r.eq, p, ctx.spec.solver.energy_decrease_tol);
        std::vector<double> L;
        for (const auto& l : r.traj.lyapunov) L.push_back(l.L);
        io::write_csv(ctx.out / "certificate.csv", {"t", "lhs", "envelope", "L"}, {c.times, c.lhs, c.envelope, L});
        summary["certificate"] = detail::certificate_json(c);
        if (ctx.spec.output.plots) {
            io::LineChart chart{"distance to equilibrium", "t", "value", true,
                                {{"distance", c.times, c.lhs}, {"envelope", c.times, c.envelope}, {"L", c.times, L}}};
            io::write_svg(ctx.out / "plots" / "certificate.svg", chart);
        }
        ctx.log("fitted rate of L / 2 = " + io::format_number(c.rate));
    }
    return detail::finish(ctx, summary, report);
}

inline std::size_t thread_cap(std::size_t work) {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KSJKO_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, work));
}

inline int cmd_sweep(const Context& ctx, const State& s0) {
    const auto& spec = ctx.spec;
    if (spec.sweep_chi.empty()) throw Error(ErrorKind::ConfigError, "'sweep.chi': needs at least one value");
    struct Point {
        double chi = 0.0;
        std::string status = "ok";
        Json certificate;
        Json equilibrium;
    };
    std::vector<Point> points(spec.sweep_chi.size());
    std::vector<ModelParams> params;
    for (double chi : spec.sweep_chi) params.push_back(io::model_params(spec, chi));

    Context quiet = ctx;
    quiet.quiet = true;
    auto work = [&](std::size_t k) {
        Point& pt = points[k];
        pt.chi = spec.sweep_chi[k];
        const fs::path dir = ctx.out / ("chi_" + std::to_string(k));
        try {
            io::ensure_directory(dir);
            auto r = detail::run_evolution(quiet, params[k], s0, true);
            Context local = quiet;
            local.out = dir;
            local.spec.chi = pt.chi;
            auto summary = detail::base_summary(local, "sweep-point");
            summary.update(detail::write_trajectory(local, r, dir, false));
            pt.equilibrium = summary["equilibrium"];
            RunReport report = detail::trajectory_status(local, r.traj, summary);
            if (report.code == Ok) {
                const auto c = theorem2_certificate(r.traj, *r.eq, params[k], spec.solver.energy_decrease_tol);
                pt.certificate = detail::certificate_json(c);
                summary["certificate"] = pt.certificate;
            }
            pt.status = report.status;
            summary["status"] = report.status;
            io::write_json(dir / "summary.json", summary);
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
    };
    const std::size_t n_threads = thread_cap(points.size());
    ctx.log("sweeping " + std::to_string(points.size()) + " coupling values on " + std::to_string(n_threads) +
            " thread(s)");
    if (n_threads == 1) {
        for (std::size_t k = 0; k < points.size(); ++k) work(k);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t k = t; k < points.size(); k += n_threads) work(k);
            });
        }
        for (auto& th : pool) th.join();
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> chi, rate_l, rate, lambda_eps, ok;
    Json list = Json::array();
    bool all_ok = true;
    for (const auto& pt : points) {
        chi.push_back(pt.chi);
        const bool has = pt.certificate.is_object();
        rate_l.push_back(has ? pt.certificate["rate_L"].get<double>() : nan);
        rate.push_back(has ? pt.certificate["rate"].get<double>() : nan);
        lambda_eps.push_back(pt.equilibrium.is_object() ? pt.equilibrium["lambda_eps"].get<double>() : nan);
        ok.push_back(pt.status == "ok" ? 1.0 : 0.0);
        all_ok = all_ok && pt.status == "ok";
        list.push_back({{"chi", pt.chi}, {"status", pt.status}, {"certificate", pt.certificate}});
    }
    io::write_csv(ctx.out / "sweep.csv", {"chi", "rate_L", "rate", "lambda_eps", "ok"}, {chi, rate_l, rate, lambda_eps, ok});
    auto summary = detail::base_summary(ctx, "sweep");
    summary["points"] = list;
    if (spec.output.plots) {
        io::ensure_directory(ctx.out / "plots");
        io::LineChart c{"decay rate against coupling", "chi", "rate", false,
                        {{"rate of L / 2", chi, rate}, {"lambda_eps", chi, lambda_eps}}};
        io::write_svg(ctx.out / "plots" / "sweep_rates.svg", c);
    }
    return detail::finish(ctx, summary, all_ok ? RunReport{} : RunReport{SolverFailure, "point-failure"});
}

inline int cmd_check_invariants(const Context& ctx, const ModelParams& p) {
    const auto eq = detail::equilibrium_for(ctx, p);
    const double h_inf = entropy(eq.state(), p).H;
    RandomStateGenerator rng(ctx.spec.seed);
    std::vector<std::vector<double>> cols(12);
    std::size_t identity_fail = 0, sandwich_fail = 0, ck_fail = 0;
    double identity_worst = 0.0, sandwich_worst = std::numeric_limits<double>::infinity(), ck_worst = 0.0;
    for (std::size_t k = 0; k < ctx.spec.check_states; ++k) {
        const State s = rng.perturbed(eq, p);
        const auto e = entropy(s, p);
        const auto l = lyapunov_parts(s, eq, p);
        const double id = std::abs((e.H - h_inf) - (l.L + p.chi * l.L_star)) / (1.0 + std::abs(e.H));
        identity_worst = std::max(identity_worst, id);
        if (!(id <= 1e-8)) ++identity_fail;
        const auto sw = sandwich_check(s, eq, p);
        if (!sw.holds()) ++sandwich_fail;
        sandwich_worst = std::min({sandwich_worst, sw.margin_lower_u() / (1.0 + std::abs(sw.L_u)),
                                   sw.margin_upper_u() / (1.0 + std::abs(sw.L_u)),
                                   sw.margin_lower_v() / (1.0 + std::abs(sw.L_v)),
                                   sw.margin_upper_v() / (1.0 + std::abs(sw.L_v))});
        const auto ck = csiszar_kullback_check(s.u, eq, p);
        if (!ck.satisfied) ++ck_fail;
        if (ck.bound > 0.0) ck_worst = std::max(ck_worst, ck.l1_sq / ck.bound);
        const double row[] = {static_cast<double>(k), e.H,      id,        l.L_u,     l.L_v,    sw.lower_u,
                              sw.upper_u,             sw.lower_v, sw.upper_v, ck.l1_sq, ck.bound, l.L_star};
        for (std::size_t c = 0; c < cols.size(); ++c) cols[c].push_back(row[c]);
    }
    io::write_csv(ctx.out / "checks.csv",
                  {"index", "H", "identity_error", "L_u", "L_v", "lower_u", "upper_u", "lower_v", "upper_v", "l1_sq",
                   "ck_bound", "L_star"},
                  cols);
    auto summary = detail::base_summary(ctx, "check-invariants");
    summary["equilibrium"] = detail::equilibrium_json(eq, p);
    summary["states"] = ctx.spec.check_states;
    summary["decomposition"] = {{"failures", identity_fail}, {"worst_relative_error", identity_worst}};
    summary["sandwich"] = {{"failures", sandwich_fail}, {"worst_relative_margin", sandwich_worst}};
    summary["csiszar_kullback"] = {{"failures", ck_fail}, {"worst_ratio", ck_worst}};
    const bool ok = identity_fail == 0 && sandwich_fail == 0 && ck_fail == 0;
    ctx.log(ok ? "all invariant checks passed" : "invariant checks failed");
    return detail::finish(ctx, summary, ok ? RunReport{} : RunReport{SolverFailure, "invariant-violated"});
}

/// Entry point of the `ksjko` executable; diagnostics go to `err`.
inline int run_command(int argc, const char* const* argv, std::ostream& err = std::cerr) {
    CLI::App app{"Minimizing-movement solver and verification toolkit for the 1D Keller-Segel system", "ksjko"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    std::optional<std::size_t> stride;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    const char* names[] = {"evolve", "equilibrium", "compare", "decay-rate", "sweep", "check-invariants"};
    const char* help[] = {"run the JKO scheme and write the trajectory",
                          "compute the stationary state and its residuals",
                          "compare the JKO scheme with the finite-difference oracle",
                          "fit the exponential decay rate and check the envelope",
                          "decay rates over a grid of coupling values",
                          "randomized checks of the decomposition and the inequalities"};
    for (std::size_t k = 0; k < 6; ++k) {
        auto* sub = app.add_subcommand(names[k], help[k]);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--stride", stride, "snapshot stride (overrides output.stride)");
        sub->add_option("--seed", seed, "random seed (overrides seed)");
        sub->add_flag("--quiet", quiet, "suppress progress messages");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "ksjko: " << e.what() << '\n';
        return ConfigFailure;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    Context ctx;
    ctx.quiet = quiet;
    ctx.err = &err;
    ModelParams params;
    std::optional<State> s0;
    try {
        ctx.spec = io::load_config(config_path);
        if (!out_dir.empty()) ctx.spec.output.dir = fs::absolute(out_dir).lexically_normal().string();
        if (stride) ctx.spec.output.stride = *stride;
        if (seed) ctx.spec.seed = *seed;
        io::validate(ctx.spec);
        ctx.out = ctx.spec.output.dir;
        params = io::model_params(ctx.spec);
        if (command != "equilibrium" && command != "check-invariants") s0 = io::initial_state(ctx.spec, params);
        io::ensure_directory(ctx.out);
    } catch (const Error& e) {
        err << "ksjko: " << e.what() << '\n';
        return ConfigFailure;
    }

    try {
        if (command == "evolve") return cmd_evolve(ctx, params, *s0);
        if (command == "equilibrium") return cmd_equilibrium(ctx, params);
        if (command == "compare") return cmd_compare(ctx, params, *s0);
        if (command == "decay-rate") return cmd_decay_rate(ctx, params, *s0);
        if (command == "sweep") return cmd_sweep(ctx, *s0);
        return cmd_check_invariants(ctx, params);
    } catch (const Error& e) {
        err << "ksjko: " << e.what() << '\n';
        return e.kind() == ErrorKind::ConfigError ? ConfigFailure : SolverFailure;
    } catch (const std::exception& e) {
        err << "ksjko: " << e.what() << '\n';
        return SolverFailure;
    }
}

}  // namespace ksjko::cli
