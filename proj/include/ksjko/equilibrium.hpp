#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/lagrangian.hpp"
#include "ksjko/params.hpp"
#include "ksjko/quantile.hpp"

namespace ksjko {

/// Stationary state (u_inf, v_inf) with u_inf = U_eps exp(-W + chi v_inf) and
/// v_inf'' = kappa v_inf - chi u_inf on the grid.
struct EquilibriumPair {
    EulerianField u_inf;
    EulerianField v_inf;
    double U_eps = 1.0;
    int iterations = 0;
    double residual = 0.0;  ///< last undamped Picard update in sup norm
    std::vector<double> residual_history;
    /// Minimizer of the quantile free energy int u log u + int u (W - chi v_inf)
    /// at the model's N_m. This is the discrete equilibrium seen by the JKO scheme
    /// and the reference for every Lagrangian comparison.
    QuantileDensity u_quantiles;

    const Grid& grid() const noexcept { return u_inf.grid; }
    State state() const { return State{u_quantiles, v_inf}; }
};

struct StationarityResidual {
    double r_u = 0.0;
    double r_v = 0.0;
};

namespace detail {

/// Trapezoid-normalized Gibbs density exp(-W + chi v) / Z; also returns U = 1/Z'.
inline EulerianField gibbs_density(const ModelParams& p, const Grid& g, std::span<const double> v,
                                   double* normalization) {
    std::vector<double> expo(g.n_nodes());
    for (std::size_t i = 0; i < expo.size(); ++i) expo[i] = -p.potential.value(g.node(i)) + p.chi * v[i];
    const double top = *std::max_element(expo.begin(), expo.end());
    std::vector<double> u(expo.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(expo[i] - top);
    const double z = gridops::integrate(g, u);
    for (double& value : u) value /= z;
    if (normalization != nullptr) *normalization = std::exp(-top) / z;
    return EulerianField(g, std::move(u));
}

inline std::vector<double> elliptic_solve(const ModelParams& p, const Grid& g, std::span<const double> u) {
    std::vector<double> rhs(u.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = p.chi * u[i];
    return gridops::solve_shifted_neumann(g, p.kappa, rhs);
}

}  // namespace detail

/// Damped Picard iteration for the stationary system.
///
/// Each sweep maps v to the Gibbs density u(v) and solves kappa v' - D2 v' = chi u(v)
/// with Neumann closure; the undamped update size is the stopping residual and the
/// damping is halved whenever it grows. The returned v_inf is the elliptic solve of
/// the returned u_inf, so the v-equation holds to rounding.
inline EquilibriumPair solve_equilibrium(const ModelParams& p, double tol = 1e-12, int max_iters = 500,
                                         std::optional<std::vector<double>> v_start = std::nullopt) {
    p.validate();
    if (!(p.kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "the equilibrium requires kappa > 0");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "equilibrium tolerance must be positive");
    const Grid g = p.grid();
    std::vector<double> v = v_start.value_or(std::vector<double>(g.n_nodes(), 0.0));
    if (v.size() != g.n_nodes()) throw Error(ErrorKind::GridMismatch, "Picard start does not match the grid");

    double theta = 1.0;
    double previous = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    for (int k = 1; k <= max_iters; ++k) {
        double normalization = 1.0;
        EulerianField u = detail::gibbs_density(p, g, v, &normalization);
        std::vector<double> v_hat = detail::elliptic_solve(p, g, u.values);
        double res = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) res = std::max(res, std::abs(v_hat[i] - v[i]));
        history.push_back(res);
        if (!std::isfinite(res)) break;
        if (res <= tol) {
            EquilibriumPair eq{std::move(u), EulerianField(g, std::move(v_hat)), normalization, k, res, history,
                               QuantileDensity(std::vector<double>{0.0, 1.0})};
            // Lagrangian image: minimize the quantile free energy with v_inf frozen.
            QuantileObjective obj;
            obj.potential = &p.potential;
            obj.field = &eq.v_inf;
            obj.coupling = p.chi;
            NewtonConfig cfg;
            cfg.max_iters = 200;
            auto start = density_to_quantiles(eq.u_inf, p.n_quantiles);
            auto polished = minimize_quantile_objective(obj, std::vector<double>(start.positions().begin(),
                                                                                 start.positions().end()),
                                                        cfg);
            eq.u_quantiles = QuantileDensity(std::move(polished.x));
            return eq;
        }
        if (res > previous) theta = std::max(0.5 * theta, 1.0 / 1024.0);
        previous = res;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - theta) * v[i] + theta * v_hat[i];
    }
    throw NoConvergenceError("Picard iteration did not reach tol = " + std::to_string(tol) + " in " +
                                 std::to_string(max_iters) + " iterations (chi may exceed the contraction regime)",
                             std::move(history));
}

/// Sup-norm residuals of the discrete stationary system.
inline StationarityResidual stationarity_residual(const EquilibriumPair& eq, const ModelParams& p) {
    const Grid g = p.grid();
    require_same_grid(eq.grid(), g, "stationarity_residual");
    require_same_grid(eq.v_inf.grid, g, "stationarity_residual");
    StationarityResidual r;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const double gibbs = eq.U_eps * std::exp(-p.potential.value(g.node(i)) + p.chi * eq.v_inf[i]);
        r.r_u = std::max(r.r_u, std::abs(eq.u_inf[i] - gibbs));
    }
    const auto lap = gridops::neumann_laplacian(g, eq.v_inf.values);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        r.r_v = std::max(r.r_v, std::abs(lap[i] - p.kappa * eq.v_inf[i] + p.chi * eq.u_inf[i]));
    }
    return r;
}

}  // namespace ksjko
