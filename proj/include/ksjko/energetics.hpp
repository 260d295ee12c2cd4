#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ksjko/equilibrium.hpp"
#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/lagrangian.hpp"
#include "ksjko/params.hpp"
#include "ksjko/potential.hpp"
#include "ksjko/quantile.hpp"

namespace ksjko {

/// H split into its four integrals; `H == internal + potential + v_part + coupling`.
struct EnergyReport {
    double H = 0.0;
    double internal = 0.0;   ///< int u log u
    double potential = 0.0;  ///< int u W
    double v_part = 0.0;     ///< ||v_x||^2 / 2 + kappa ||v||^2 / 2
    double coupling = 0.0;   ///< -chi int u v
};

struct LyapunovReport {
    double L = 0.0;
    double L_u = 0.0;
    double L_v = 0.0;
    double L_star = 0.0;
};

/// ||v_x||^2 / 2 + kappa ||v||^2 / 2 with forward differences and trapezoid mass.
inline double field_energy(const EulerianField& v, double kappa) {
    return 0.5 * gridops::gradient_norm_sq(v.grid, v.values) + 0.5 * kappa * gridops::inner(v.grid, v.values, v.values);
}

/// Discrete entropy functional.
///
/// The u-integrals are Lagrangian (cell widths for int u log u, particle means
/// for int u W and int u v with v piecewise linear); the v-integrals use forward
/// differences and the trapezoid rule. These are exactly the terms minimized by
/// the JKO step.
inline EnergyReport entropy(const State& s, const ModelParams& p) {
    EnergyReport e;
    const auto x = s.u.positions();
    e.internal = lagrangian::internal_energy(x);
    double pot = 0.0;
    for (double xj : x) pot += p.potential.value(xj);
    e.potential = pot / static_cast<double>(x.size());
    e.v_part = field_energy(s.v, p.kappa);
    e.coupling = p.chi == 0.0 ? 0.0 : -p.chi * integrate_against(s.v, s.u);
    e.H = e.internal + e.potential + e.v_part + e.coupling;
    return e;
}

/// W^eps = W - chi v_inf as a node table, plus its smallest nodal curvature.
struct PerturbedPotential {
    PotentialSpec spec;
    double lambda_eps;
};

/// Derivatives of the v_inf part are discrete: centered first differences (zero at
/// the Neumann boundary) and the Neumann second difference.
inline PerturbedPotential perturbed_potential(const ModelParams& p, const EquilibriumPair& eq) {
    const Grid g = p.grid();
    require_same_grid(eq.v_inf.grid, g, "perturbed_potential");
    const std::size_t n = g.n_nodes();
    const auto& v = eq.v_inf.values;
    const auto lap = gridops::neumann_laplacian(g, v);
    std::vector<double> w(n), wx(n), wxx(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.node(i);
        double vx = 0.0;
        if (i > 0 && i + 1 < n) vx = (v[i + 1] - v[i - 1]) / (2.0 * g.spacing());
        w[i] = p.potential.value(x) - p.chi * v[i];
        wx[i] = p.potential.slope(x) - p.chi * vx;
        wxx[i] = p.potential.curvature(x) - p.chi * lap[i];
    }
    const double lambda_eps = *std::min_element(wxx.begin(), wxx.end());
    return {PotentialSpec::tabulated(g, std::move(w), std::move(wx), std::move(wxx)), lambda_eps};
}

namespace detail {

/// int u log u + int u (W - chi v_inf) in the Lagrangian rules.
inline double perturbed_free_energy(const QuantileDensity& x, const EquilibriumPair& eq, const ModelParams& p) {
    double pot = 0.0;
    for (double xj : x.positions()) pot += p.potential.value(xj);
    pot /= static_cast<double>(x.size());
    const double coupling = p.chi == 0.0 ? 0.0 : p.chi * integrate_against(eq.v_inf, x);
    return lagrangian::internal_energy(x.positions()) + pot - coupling;
}

}  // namespace detail

/// L_u, L_v and L_* relative to the equilibrium.
///
/// L_u compares perturbed free energies against the equilibrium's quantile image;
/// in L_* the u_inf part is the trapezoid pairing with the Gibbs table. With these
/// rules H(s) - H(eq.state()) = L + chi L_* holds up to the v-stationarity residual.
inline LyapunovReport lyapunov_parts(const State& s, const EquilibriumPair& eq, const ModelParams& p) {
    require_same_grid(s.v.grid, eq.v_inf.grid, "lyapunov_parts");
    require_same_resolution(s.u, eq.u_quantiles);
    LyapunovReport r;
    r.L_u = detail::perturbed_free_energy(s.u, eq, p) - detail::perturbed_free_energy(eq.u_quantiles, eq, p);

    std::vector<double> dv(s.v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = s.v[i] - eq.v_inf[i];
    const EulerianField dv_field(s.v.grid, dv);
    r.L_v = field_energy(dv_field, p.kappa);
    r.L_star = -(integrate_against(dv_field, s.u) - gridops::inner(s.v.grid, eq.u_inf.values, dv));
    r.L = r.L_u + r.L_v;
    return r;
}

/// int u ((log u + W^eps)_x)^2, split by where the stencil sits.
struct FisherReport {
    double total = 0.0;
    double interior = 0.0;  ///< nodes whose two neighbours on each side are above the density floor
    double boundary = 0.0;  ///< remaining counted nodes, next to the edge of the support
};

/// Eulerian Fisher-type dissipation by centered differences of log u + W^eps.
///
/// Nodes whose three-point stencil touches a value at or below
/// floor_factor * max u contribute nothing.
inline FisherReport fisher_dissipation_report(const EulerianField& u, const PotentialSpec& w_eps,
                                              double floor_factor = 1e-12) {
    const Grid& g = u.grid;
    const std::size_t n = g.n_nodes();
    const double top = *std::max_element(u.values.begin(), u.values.end());
    if (!(top > 0.0)) throw Error(ErrorKind::InvalidDensity, "density vanishes on the whole grid");
    const double floor = floor_factor * top;
    for (double value : u.values) {
        if (value < -1e-12) throw Error(ErrorKind::InvalidDensity, "negative density in fisher_dissipation");
    }
    auto above = [&](std::ptrdiff_t i) {
        return i >= 0 && i < static_cast<std::ptrdiff_t>(n) && u[static_cast<std::size_t>(i)] > floor;
    };
    std::vector<double> mu(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] > floor) mu[i] = std::log(u[i]) + w_eps.value(g.node(i));
    }
    FisherReport r;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto si = static_cast<std::ptrdiff_t>(i);
        if (!(above(si - 1) && above(si) && above(si + 1))) continue;
        const double grad = (mu[i + 1] - mu[i - 1]) / (2.0 * g.spacing());
        const double contribution = g.weight(i) * u[i] * grad * grad;
        if (above(si - 2) && above(si + 2)) {
            r.interior += contribution;
        } else {
            r.boundary += contribution;
        }
    }
    r.total = r.interior + r.boundary;
    return r;
}

inline double fisher_dissipation_u(const EulerianField& u, const PotentialSpec& w_eps) {
    return fisher_dissipation_report(u, w_eps).total;
}

inline double fisher_dissipation_u(const QuantileDensity& u, const PotentialSpec& w_eps, const Grid& g) {
    return fisher_dissipation_report(quantiles_to_density(u, g), w_eps).total;
}

/// ||(v - v_inf)_xx - kappa (v - v_inf)||^2 with the Neumann second difference.
inline double dissipation_v(const EulerianField& v, const EquilibriumPair& eq, double kappa) {
    require_same_grid(v.grid, eq.v_inf.grid, "dissipation_v");
    std::vector<double> dv(v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = v[i] - eq.v_inf[i];
    auto r = gridops::neumann_laplacian(v.grid, dv);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= kappa * dv[i];
    return gridops::inner(v.grid, r, r);
}

}  // namespace ksjko
