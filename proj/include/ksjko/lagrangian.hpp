#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/potential.hpp"
#include "ksjko/quantile.hpp"
#include "ksjko/tridiag.hpp"

namespace ksjko {

namespace lagrangian {

/// int u log u dx = -(1/N) sum_j log(N (X_{j+1} - X_j)) over the N - 1 gaps.
///
/// The tails beyond the outermost positions carry no entropy term: the density
/// vanishes at m = 0 and m = 1, and weighting the edge gaps would push the
/// extreme particles outward.
inline double internal_energy(std::span<const double> x) {
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) sum += std::log(dn * (x[j + 1] - x[j]));
    return -sum / dn;
}

}  // namespace lagrangian

/// Tolerances of the quantile Newton solver.
struct NewtonConfig {
    int max_iters = 40;
    double grad_tol = 1e-9;  ///< on the per-particle gradient (objective scaled by N)
    double backtrack = 0.5;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

/// Objective over quantile positions, scaled by N (so the gradient is per particle):
///
///   Phi(X) = (w/2) sum (X_j - A_j)^2 - sum_j log(N dX_j) + sum W(X_j) - chi sum v(X_j)
///
/// with v sampled piecewise linearly. Phi / N is the Lagrangian form of
/// prox + int u log u + int u W - chi int u v.
struct QuantileObjective {
    std::span<const double> anchor;  ///< prox centre; may be empty when prox_weight == 0
    double prox_weight = 0.0;
    const PotentialSpec* potential = nullptr;
    const EulerianField* field = nullptr;
    double coupling = 0.0;

    bool admissible(std::span<const double> x) const {
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (!std::isfinite(x[j])) return false;
            if (j > 0 && !(x[j] > x[j - 1])) return false;
            if (!potential->defined_at(x[j])) return false;
            if (field != nullptr && coupling != 0.0 && !field->grid.contains(x[j])) return false;
        }
        return true;
    }

    double field_value(double xj) const {
        const Grid& g = field->grid;
        const auto loc = g.locate(xj);
        return (*field)[loc.cell] + loc.offset * ((*field)[loc.cell + 1] - (*field)[loc.cell]);
    }

    double field_slope(double xj) const {
        const Grid& g = field->grid;
        const auto loc = g.locate(xj);
        return ((*field)[loc.cell + 1] - (*field)[loc.cell]) / g.spacing();
    }

    bool has_coupling() const noexcept { return field != nullptr && coupling != 0.0; }

    double value(std::span<const double> x) const {
        const std::size_t n = x.size();
        double sum = static_cast<double>(n) * lagrangian::internal_energy(x);
        for (std::size_t j = 0; j < n; ++j) {
            if (prox_weight != 0.0) {
                const double d = x[j] - anchor[j];
                sum += 0.5 * prox_weight * d * d;
            }
            sum += potential->value(x[j]);
            if (has_coupling()) sum -= coupling * field_value(x[j]);
        }
        return sum;
    }

    /// Phi(x + alpha d) - Phi(x), accumulated term by term to avoid cancellation.
    double delta(std::span<const double> x, std::span<const double> d, double alpha) const {
        const std::size_t n = x.size();
        double sum = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double ratio = alpha * (d[j + 1] - d[j]) / (x[j + 1] - x[j]);
            sum -= std::log1p(ratio);
        }
        const auto* quad = potential->as_quadratic();
        for (std::size_t j = 0; j < n; ++j) {
            const double step = alpha * d[j];
            const double xn = x[j] + step;
            if (prox_weight != 0.0) sum += 0.5 * prox_weight * step * (2.0 * (x[j] - anchor[j]) + step);
            if (quad != nullptr) {
                sum += 0.5 * quad->lambda0 * step * (2.0 * x[j] + step);
            } else {
                sum += potential->value(xn) - potential->value(x[j]);
            }
            if (has_coupling()) sum -= coupling * (field_value(xn) - field_value(x[j]));
        }
        return sum;
    }

    std::vector<double> gradient(std::span<const double> x) const {
        const std::size_t n = x.size();
        std::vector<double> g(n, 0.0);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double c = 1.0 / (x[j + 1] - x[j]);
            g[j] += c;
            g[j + 1] -= c;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (prox_weight != 0.0) g[j] += prox_weight * (x[j] - anchor[j]);
            g[j] += potential->slope(x[j]);
            if (has_coupling()) g[j] -= coupling * field_slope(x[j]);
        }
        return g;
    }

    /// Newton direction from the tridiagonal Hessian of the prox, entropy and
    /// potential terms (the piecewise linear coupling has zero curvature).
    std::vector<double> newton_direction(std::span<const double> x, std::span<const double> g) const {
        const std::size_t n = x.size();
        std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double dx = x[j + 1] - x[j];
            const double c = 1.0 / (dx * dx);
            diag[j] += c;
            diag[j + 1] += c;
            upper[j] = -c;
            lower[j + 1] = -c;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double convex = prox_weight + std::max(potential->curvature(x[j]), 0.0);
            if (convex <= 0.0) convex = 1e-8;  // the entropy Hessian is singular along translations
            diag[j] += convex;
            rhs[j] = -g[j];
        }
        return solve_tridiagonal(lower, diag, upper, rhs);
    }

    /// Largest gradient jump of the coupling term across grid nodes, i.e. the
    /// width of the subdifferential at a kink of the piecewise linear v.
    double kink_allowance() const {
        if (!has_coupling()) return 0.0;
        const Grid& g = field->grid;
        double jump = 0.0;
        for (std::size_t i = 1; i + 1 < field->size(); ++i) {
            jump = std::max(jump, std::abs((*field)[i + 1] - 2.0 * (*field)[i] + (*field)[i - 1]));
        }
        return std::abs(coupling) * jump / g.spacing();
    }
};

struct NewtonResult {
    std::vector<double> x;
    int iterations = 0;
    double grad_norm = 0.0;
    double decrease = 0.0;      ///< Phi(x0) - Phi(x), scaled by N like Phi
    bool at_kink = false;       ///< stopped at a non-smooth point of the coupling term
};

namespace detail {

inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Step length keeping every gap X_{j+1} - X_j above a tenth of its current value.
inline double monotone_step_cap(std::span<const double> x, std::span<const double> d) {
    double cap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
        const double closing = d[j] - d[j + 1];
        if (closing > 0.0) cap = std::min(cap, 0.9 * (x[j + 1] - x[j]) / closing);
    }
    return cap;
}

}  // namespace detail

/// Damped Newton descent with an Armijo line search capped to preserve monotonicity.
///
/// Every accepted iterate decreases the objective, and the -log barrier keeps the
/// positions strictly increasing. When neither the Newton nor the scaled steepest
/// descent direction yields a decrease, the point is accepted if its gradient lies
/// within the coupling kink allowance or the predicted decrease is below rounding;
/// otherwise an InnerStallError is thrown.
inline NewtonResult minimize_quantile_objective(const QuantileObjective& obj, std::vector<double> x,
                                                const NewtonConfig& cfg) {
    if (!obj.admissible(x)) throw Error(ErrorKind::InvalidDensity, "start of the quantile solve is not admissible");
    NewtonResult result;
    const double allowance = obj.kink_allowance();
    const double scale = 1.0 + std::abs(obj.value(x));
    std::vector<double> trial(x.size());

    auto line_search = [&](std::span<const double> d, double slope, double& accepted_delta) -> double {
        double alpha = std::min(1.0, detail::monotone_step_cap(x, d));
        for (int k = 0; k < cfg.max_backtracks; ++k, alpha *= cfg.backtrack) {
            for (std::size_t j = 0; j < x.size(); ++j) trial[j] = x[j] + alpha * d[j];
            if (!obj.admissible(trial)) continue;
            const double change = obj.delta(x, d, alpha);
            if (std::isfinite(change) && change < 0.0 && change <= cfg.armijo * alpha * slope) {
                accepted_delta = change;
                return alpha;
            }
        }
        return 0.0;
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        auto g = obj.gradient(x);
        result.grad_norm = detail::inf_norm(g);
        if (result.grad_norm <= cfg.grad_tol) {
            result.x = std::move(x);
            return result;
        }

        auto d = obj.newton_direction(x, g);
        double slope = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) slope += g[j] * d[j];
        if (!(slope < 0.0)) {
            for (std::size_t j = 0; j < x.size(); ++j) d[j] = -g[j];
            slope = -result.grad_norm * result.grad_norm;
        }
        const double newton_slope = slope;
        double change = 0.0;
        double alpha = line_search(d, slope, change);
        if (alpha == 0.0) {
            // Fall back to the normalized steepest descent direction.
            double sd_slope = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                d[j] = -g[j];
                sd_slope -= g[j] * g[j];
            }
            const double m = std::max(result.grad_norm, 1e-300);
            for (double& dj : d) dj /= m;
            sd_slope /= m;
            alpha = line_search(d, sd_slope, change);
        }
        if (alpha == 0.0) {
            const bool rounding_limited = std::abs(newton_slope) <= 1e-13 * scale;
            if (result.grad_norm <= cfg.grad_tol + allowance || rounding_limited) {
                result.at_kink = !rounding_limited;
                result.x = std::move(x);
                return result;
            }
            throw InnerStallError("no descent from the current quantile iterate (|grad| = " +
                                      std::to_string(result.grad_norm) + ")",
                                  x, result.grad_norm);
        }
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += alpha * d[j];
        result.decrease -= change;
        result.iterations = it + 1;
    }
    result.grad_norm = detail::inf_norm(obj.gradient(x));
    result.x = std::move(x);
    return result;
}

}  // namespace ksjko
