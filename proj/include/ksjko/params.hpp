#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/potential.hpp"

namespace ksjko {

/// Coefficients of the system plus the discretization it is solved on.
struct ModelParams {
    double chi = 0.0;    ///< chemotactic coupling (the weak-coupling epsilon)
    double kappa = 1.0;  ///< decay rate of v
    PotentialSpec potential = PotentialSpec::quadratic(1.0);
    double half_width = 10.0;
    std::size_t n_cells = 800;
    std::size_t n_quantiles = 400;

    /// R such that a lambda0-convex confinement keeps all but ~1e-10 of the mass inside.
    static double default_half_width(double lambda0) { return 10.0 / std::sqrt(lambda0); }

    static ModelParams quadratic(double chi, double kappa, double lambda0, std::size_t n_cells = 800,
                                 std::size_t n_quantiles = 400) {
        ModelParams p;
        p.chi = chi;
        p.kappa = kappa;
        p.potential = PotentialSpec::quadratic(lambda0);
        p.half_width = default_half_width(lambda0);
        p.n_cells = n_cells;
        p.n_quantiles = n_quantiles;
        p.validate();
        return p;
    }

    Grid grid() const { return Grid::uniform(half_width, n_cells); }

    /// Convexity modulus of W on the grid.
    double lambda0() const { return potential.min_curvature(grid()); }

    void validate() const {
        if (!std::isfinite(chi)) throw Error(ErrorKind::InvalidArgument, "chi must be finite");
        if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw Error(ErrorKind::InvalidArgument, "kappa must be >= 0");
        if (n_quantiles < 2) throw Error(ErrorKind::InvalidArgument, "N_m must be at least 2");
        const Grid g = grid();
        if (const auto* t = potential.as_tabulated()) require_same_grid(t->grid, g, "potential table");
    }

    bool operator==(const ModelParams&) const = default;
};

}  // namespace ksjko
