#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ksjko/energetics.hpp"
#include "ksjko/equilibrium.hpp"
#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/lagrangian.hpp"
#include "ksjko/params.hpp"
#include "ksjko/quantile.hpp"

namespace ksjko {

struct InnerSolverConfig {
    int max_outer_alternations = 50;
    int max_newton_iters = 40;
    double grad_tol = 1e-9;  ///< per-particle gradient of N * objective
    double energy_decrease_tol = 1e-12;
    double backtrack = 0.5;
    double armijo = 1e-4;

    void validate() const {
        if (max_outer_alternations < 1 || max_newton_iters < 1) {
            throw Error(ErrorKind::InvalidArgument, "solver iteration limits must be positive");
        }
        if (!(grad_tol > 0.0) || !(energy_decrease_tol > 0.0) || !(armijo > 0.0) || !(armijo < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "solver tolerances must be positive");
        }
        if (!(backtrack > 0.0 && backtrack < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "backtracking factor must lie in (0, 1)");
        }
    }

    NewtonConfig newton() const {
        NewtonConfig c;
        c.max_iters = max_newton_iters;
        c.grad_tol = grad_tol;
        c.backtrack = backtrack;
        c.armijo = armijo;
        return c;
    }

    bool operator==(const InnerSolverConfig&) const = default;
};

struct JkoStepReport {
    int alternations = 0;
    double grad_norm = 0.0;
    double step_dist = 0.0;
    double penalized_decrease = 0.0;  ///< H(old) - [H(new) + dist^2 / (2 tau)]
    double penalized_energy = 0.0;    ///< H(new) + dist^2 / (2 tau)
    bool at_kink = false;
};

/// Exact minimizer of dist_v^2 / (2 tau) + ||v_x||^2/2 + kappa ||v||^2/2 - chi int u v.
///
/// Solves (1/tau + kappa) v - D2 v = v_prev / tau + chi u_h, where u_h is the
/// linear deposition of the particles, i.e. the Riesz representer of v -> int u v
/// in the discrete rules used by `entropy`.
inline EulerianField solve_v_subproblem(const EulerianField& v_prev, const QuantileDensity& u, double tau,
                                        const ModelParams& p) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    const Grid& g = v_prev.grid;
    std::vector<double> rhs(v_prev.values);
    for (double& r : rhs) r /= tau;
    if (p.chi != 0.0) {
        const auto dep = deposit_to_grid(u, g);
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += p.chi * dep[i];
    }
    return EulerianField(g, gridops::solve_shifted_neumann(g, 1.0 / tau + p.kappa, rhs));
}

namespace detail {

inline NewtonResult run_x_solve(const QuantileDensity& x_prev, const std::vector<double>& start,
                                const EulerianField& v, double tau, const ModelParams& p,
                                const InnerSolverConfig& cfg) {
    QuantileObjective obj;
    obj.anchor = x_prev.positions();
    obj.prox_weight = 1.0 / tau;
    obj.potential = &p.potential;
    obj.field = &v;
    obj.coupling = p.chi;
    return minimize_quantile_objective(obj, start, cfg.newton());
}

}  // namespace detail

/// Minimizes W_2^2(., x_prev) / (2 tau) + int u log u + int u W - chi int u v over
/// quantiles, starting from `start` (defaults to x_prev).
inline QuantileDensity solve_x_subproblem(const QuantileDensity& x_prev, const EulerianField& v, double tau,
                                          const ModelParams& p, const InnerSolverConfig& cfg,
                                          const QuantileDensity* start = nullptr) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    const auto& s = start != nullptr ? *start : x_prev;
    auto result = detail::run_x_solve(x_prev, {s.positions().begin(), s.positions().end()}, v, tau, p, cfg);
    return QuantileDensity(std::move(result.x));
}

/// penalized energy H(s) + dist^2(s, anchor) / (2 tau)
inline double penalized_energy(const State& s, const State& anchor, double tau, const ModelParams& p) {
    const double d = compound_dist(s, anchor);
    return entropy(s, p).H + d * d / (2.0 * tau);
}

/// One minimizing-movement step by block alternation: exact v-solve, then Newton
/// in the quantiles, until the penalized energy stops decreasing.
inline std::pair<State, JkoStepReport> jko_step(const State& prev, double tau, const ModelParams& p,
                                                const InnerSolverConfig& cfg) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    cfg.validate();
    JkoStepReport report;
    const double h_prev = entropy(prev, p).H;
    double current = h_prev;
    State state = prev;
    for (int k = 0; k < cfg.max_outer_alternations; ++k) {
        EulerianField v = solve_v_subproblem(prev.v, state.u, tau, p);
        std::vector<double> start(state.u.positions().begin(), state.u.positions().end());
        auto xs = detail::run_x_solve(prev.u, start, v, tau, p, cfg);
        State candidate{QuantileDensity(std::move(xs.x)), std::move(v)};
        const double value = penalized_energy(candidate, prev, tau, p);
        report.alternations = k + 1;
        // Both blocks are descents, so the only possible increase is rounding.
        if (value <= current) {
            const double gain = current - value;
            state = std::move(candidate);
            current = value;
            report.grad_norm = xs.grad_norm;
            report.at_kink = xs.at_kink;
            if (gain < cfg.energy_decrease_tol) break;
        } else {
            break;
        }
    }
    report.step_dist = compound_dist(state, prev);
    report.penalized_energy = current;
    report.penalized_decrease = h_prev - current;
    return {std::move(state), report};
}

/// Iterates with per-step reports; `at(t)` is the piecewise constant interpolation.
struct JkoTrajectory {
    double tau = 0.0;
    std::vector<double> times;
    std::vector<State> states;
    std::vector<JkoStepReport> steps;  ///< steps[n-1] produced states[n]
    std::vector<EnergyReport> energies;
    std::vector<LyapunovReport> lyapunov;  ///< empty unless an equilibrium was supplied
    std::optional<std::string> failure;

    std::size_t size() const noexcept { return states.size(); }

    /// Iterate n for t in ((n-1) tau, n tau]; the initial state at t = 0.
    std::size_t index_at(double t) const {
        if (t <= 0.0) return 0;
        const auto n = static_cast<std::size_t>(std::ceil(t / tau - 1e-9));
        if (n >= states.size()) {
            throw Error(ErrorKind::InvalidArgument, "time " + std::to_string(t) + " beyond the computed trajectory");
        }
        return n;
    }

    const State& at(double t) const { return states[index_at(t)]; }
};

inline JkoTrajectory evolve(const State& s0, double tau, double T, const ModelParams& p, const InnerSolverConfig& cfg,
                            const EquilibriumPair* eq = nullptr) {
    if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
    if (!(T >= 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be nonnegative");
    p.validate();
    const EnergyReport e0 = entropy(s0, p);
    if (!std::isfinite(e0.H)) throw Error(ErrorKind::InvalidDensity, "initial entropy is not finite");

    JkoTrajectory traj;
    traj.tau = tau;
    traj.times.push_back(0.0);
    traj.states.push_back(s0);
    traj.energies.push_back(e0);
    if (eq != nullptr) traj.lyapunov.push_back(lyapunov_parts(s0, *eq, p));

    const auto n_steps = T == 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::ceil(T / tau - 1e-9));
    for (std::size_t n = 1; n <= n_steps; ++n) {
        try {
            auto [next, report] = jko_step(traj.states.back(), tau, p, cfg);
            traj.energies.push_back(entropy(next, p));
            if (eq != nullptr) traj.lyapunov.push_back(lyapunov_parts(next, *eq, p));
            traj.steps.push_back(report);
            traj.states.push_back(std::move(next));
            traj.times.push_back(static_cast<double>(n) * tau);
        } catch (const Error& err) {
            traj.failure = "step " + std::to_string(n) + ": " + err.what();
            break;
        }
    }
    return traj;
}

}  // namespace ksjko
