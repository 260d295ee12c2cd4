#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/params.hpp"
#include "ksjko/tridiag.hpp"

namespace ksjko {

enum class FluxScheme { Central, Upwind };

struct FdConfig {
    double dt = 1e-3;
    FluxScheme flux = FluxScheme::Central;
    std::size_t record_stride = 1;  ///< keep every k-th step (the initial and final states are always kept)

    bool operator==(const FdConfig&) const = default;
};

struct FdTrajectory {
    double dt = 0.0;
    std::vector<std::size_t> steps;  ///< step index of each record
    std::vector<double> times;
    std::vector<EulerianField> u;
    std::vector<EulerianField> v;
    double max_mass_drift = 0.0;     ///< largest per-step change of the trapezoid mass
    std::optional<std::string> failure;

    std::size_t size() const noexcept { return times.size(); }

    /// Record holding step k = ceil(t / dt), the piecewise constant convention.
    std::optional<std::size_t> record_at(double t) const {
        const auto k = t <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
        const auto it = std::lower_bound(steps.begin(), steps.end(), k);
        if (it == steps.end() || *it != k) return std::nullopt;
        return static_cast<std::size_t>(it - steps.begin());
    }
};

namespace detail {

inline double max_drift(const Grid& g, const ModelParams& p, std::span<const double> v) {
    double b = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        const double xm = 0.5 * (g.node(i) + g.node(i + 1));
        b = std::max(b, std::abs(-p.potential.slope(xm) + p.chi * (v[i + 1] - v[i]) / g.spacing()));
    }
    return b;
}

}  // namespace detail

/// IMEX finite-volume oracle on the nodes of the grid (dual cells of width h, h/2 at the ends).
///
/// Per step: v from (1/dt + kappa - D2) v' = v / dt + chi u, then u from the
/// conservative update with implicit diffusion and explicit drift flux
/// b u, b = -W_x + chi v'_x at the cell faces, zero flux at the two ends.
inline FdTrajectory fd_evolve(const EulerianField& u0, const EulerianField& v0, const FdConfig& cfg, double T,
                              const ModelParams& p) {
    p.validate();
    const Grid g = p.grid();
    require_same_grid(u0.grid, g, "fd_evolve");
    require_same_grid(v0.grid, g, "fd_evolve");
    if (!(cfg.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    if (!(T >= 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be nonnegative");
    if (cfg.record_stride == 0) throw Error(ErrorKind::InvalidArgument, "record stride must be positive");
    for (double value : u0.values) {
        if (value < 0.0) throw Error(ErrorKind::InvalidDensity, "initial density has negative values");
    }
    const double mass0 = gridops::integrate(g, u0.values);
    if (std::abs(mass0 - 1.0) > 1e-8) throw Error(ErrorKind::NormalizationError, "initial density mass " + std::to_string(mass0));

    const std::size_t n = g.n_nodes();
    const double h = g.spacing();
    const double dt = cfg.dt;
    const double inv_h2 = 1.0 / (h * h);

    auto check_cfl = [&](std::span<const double> v) {
        const double b = detail::max_drift(g, p, v);
        if (b > 0.0 && dt > h / (2.0 * b)) {
            throw Error(ErrorKind::InvalidArgument, "CFL violated: dt = " + std::to_string(dt) +
                                                        " exceeds h / (2 max|b|); use dt <= " +
                                                        std::to_string(h / (2.0 * b)));
        }
    };
    check_cfl(v0.values);

    // u-system M/dt + K in the lumped form 1/dt - D2 (Neumann).
    std::vector<double> lower(n, -inv_h2), diag(n, 1.0 / dt + 2.0 * inv_h2), upper(n, -inv_h2);
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    upper[0] = -2.0 * inv_h2;
    lower[n - 1] = -2.0 * inv_h2;

    std::vector<double> xface(n - 1), wface(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        xface[i] = 0.5 * (g.node(i) + g.node(i + 1));
        wface[i] = p.potential.slope(xface[i]);
    }

    FdTrajectory traj;
    traj.dt = dt;
    traj.steps.push_back(0);
    traj.times.push_back(0.0);
    traj.u.push_back(u0);
    traj.v.push_back(v0);

    std::vector<double> u = u0.values, v = v0.values;
    std::vector<double> flux(n - 1), rhs(n), vrhs(n);
    double mass = mass0;
    const auto n_steps = T == 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    for (std::size_t k = 1; k <= n_steps; ++k) {
        try {
            for (std::size_t i = 0; i < n; ++i) vrhs[i] = v[i] / dt + p.chi * u[i];
            v = gridops::solve_shifted_neumann(g, 1.0 / dt + p.kappa, vrhs);
            check_cfl(v);

            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double b = -wface[i] + p.chi * (v[i + 1] - v[i]) / h;
                if (cfg.flux == FluxScheme::Central) {
                    flux[i] = b * 0.5 * (u[i] + u[i + 1]);
                } else {
                    flux[i] = b > 0.0 ? b * u[i] : b * u[i + 1];
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                const double right = i + 1 < n ? flux[i] : 0.0;
                const double left = i > 0 ? flux[i - 1] : 0.0;
                rhs[i] = u[i] / dt - (right - left) / g.weight(i);
            }
            u = solve_tridiagonal(lower, diag, upper, rhs);

            double most_negative = 0.0;
            for (double value : u) most_negative = std::min(most_negative, value);
            if (most_negative < -1e-10) {
                throw Error(ErrorKind::StabilityError, "density undershoot " + std::to_string(most_negative) +
                                                           " at t = " + std::to_string(static_cast<double>(k) * dt));
            }
            if (most_negative < 0.0) {
                for (double& value : u) value = std::max(value, 0.0);
                const double clipped = gridops::integrate(g, u);
                for (double& value : u) value *= mass / clipped;
            }
            const double new_mass = gridops::integrate(g, u);
            traj.max_mass_drift = std::max(traj.max_mass_drift, std::abs(new_mass - mass));
            mass = new_mass;
        } catch (const Error& err) {
            traj.failure = err.what();
            break;
        }
        if (k % cfg.record_stride == 0 || k == n_steps) {
            traj.steps.push_back(k);
            traj.times.push_back(static_cast<double>(k) * dt);
            traj.u.emplace_back(g, u);
            traj.v.emplace_back(g, v);
        }
    }
    return traj;
}

}  // namespace ksjko
