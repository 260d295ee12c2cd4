#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"

namespace ksjko {

/// Lagrangian representation of a probability density on the line.
///
/// Position X_j carries the mass point m_j = (j + 1/2) / N (zero based). The
/// represented measure has total mass one by construction; the only invariant
/// to maintain is strict monotonicity of the positions.
class QuantileDensity {
public:
    explicit QuantileDensity(std::vector<double> positions) : positions_(std::move(positions)) {
        if (positions_.size() < 2) {
            throw Error(ErrorKind::InvalidArgument, "a quantile density needs at least 2 positions");
        }
        for (std::size_t j = 0; j < positions_.size(); ++j) {
            if (!std::isfinite(positions_[j])) throw Error(ErrorKind::InvalidDensity, "non-finite quantile position");
            if (j > 0 && !(positions_[j] > positions_[j - 1])) {
                throw Error(ErrorKind::InvalidDensity,
                            "quantile positions not strictly increasing at index " + std::to_string(j));
            }
        }
    }

    /// Discretizes an inverse CDF at the mass points.
    template <class F>
    static QuantileDensity from_quantile_function(std::size_t n, F&& inverse_cdf) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = inverse_cdf(mass_point(j, n));
        return QuantileDensity(std::move(x));
    }

    static double mass_point(std::size_t j, std::size_t n) noexcept {
        return (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    }

    std::size_t size() const noexcept { return positions_.size(); }
    std::span<const double> positions() const noexcept { return positions_; }
    double operator[](std::size_t j) const noexcept { return positions_[j]; }
    double front() const noexcept { return positions_.front(); }
    double back() const noexcept { return positions_.back(); }

    /// Support of the reconstructed density: half a cell beyond each extreme position.
    double support_left() const noexcept { return positions_[0] - 0.5 * (positions_[1] - positions_[0]); }
    double support_right() const noexcept {
        const std::size_t n = positions_.size();
        return positions_[n - 1] + 0.5 * (positions_[n - 1] - positions_[n - 2]);
    }

    bool operator==(const QuantileDensity&) const = default;

private:
    std::vector<double> positions_;
};

/// A point of the state space P_2 x L^2.
struct State {
    QuantileDensity u;
    EulerianField v;
};

inline void require_same_resolution(const QuantileDensity& a, const QuantileDensity& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::ResolutionMismatch, "quantile densities with " + std::to_string(a.size()) + " and " +
                                                       std::to_string(b.size()) + " mass points");
    }
}

inline void require_inside(const QuantileDensity& x, const Grid& g) {
    if (x.front() < g.left() || x.back() > g.right()) {
        throw Error(ErrorKind::DomainOverflow, "quantiles span [" + std::to_string(x.front()) + ", " +
                                                   std::to_string(x.back()) + "] outside the domain [-" +
                                                   std::to_string(g.half_width()) + ", " +
                                                   std::to_string(g.half_width()) + "]; enlarge R");
    }
}

/// Inverts the CDF of the piecewise linear interpolant of `u`.
///
/// The CDF is piecewise quadratic; its values at the nodes are the cumulative
/// trapezoid sums, so the inversion is exact for the trapezoid mass.
inline QuantileDensity density_to_quantiles(const EulerianField& u, std::size_t n_quantiles) {
    if (n_quantiles < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 quantiles");
    const Grid& g = u.grid;
    const double h = g.spacing();
    std::vector<double> rho(u.values);
    for (double& r : rho) {
        if (r < -1e-12) throw Error(ErrorKind::InvalidDensity, "density takes the negative value " + std::to_string(r));
        r = std::max(r, 0.0);
    }
    std::vector<double> cdf(rho.size(), 0.0);
    for (std::size_t i = 0; i + 1 < rho.size(); ++i) cdf[i + 1] = cdf[i] + 0.5 * h * (rho[i] + rho[i + 1]);
    const double mass = cdf.back();
    if (std::abs(mass - 1.0) > 1e-8) {
        throw Error(ErrorKind::NormalizationError, "density has trapezoid mass " + std::to_string(mass));
    }
    // Rescale so that the inversion targets exactly [0, 1].
    for (double& c : cdf) c /= mass;
    for (double& r : rho) r /= mass;

    std::vector<double> x(n_quantiles);
    std::size_t cell = 0;
    for (std::size_t j = 0; j < n_quantiles; ++j) {
        const double m = QuantileDensity::mass_point(j, n_quantiles);
        while (cell + 2 < cdf.size() && cdf[cell + 1] < m) ++cell;
        const double residual = m - cdf[cell];
        const double b = rho[cell];
        const double a = (rho[cell + 1] - rho[cell]) / (2.0 * h);
        // Positive root of a s^2 + b s = residual, in the cancellation-free form.
        const double disc = std::max(b * b + 4.0 * a * residual, 0.0);
        const double denom = b + std::sqrt(disc);
        double s = denom > 0.0 ? 2.0 * residual / denom : 0.0;
        s = std::clamp(s, 0.0, h);
        x[j] = g.node(cell) + s;
    }
    return QuantileDensity(std::move(x));
}

/// Eulerian resampling of a quantile density.
///
/// Cell j carries density rho_j = (1/N) / (X_{j+1} - X_j), located at the cell
/// midpoint. Node values interpolate log rho linearly between midpoints, extend
/// with the end slopes over the half cells beyond the extreme positions, vanish
/// outside the support, and are renormalized to unit trapezoid mass.
inline EulerianField quantiles_to_density(const QuantileDensity& x, const Grid& g) {
    require_inside(x, g);
    const std::size_t n = x.size();
    const double dm = 1.0 / static_cast<double>(n);
    std::vector<double> mid(n - 1), log_rho(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double width = x[j + 1] - x[j];
        mid[j] = 0.5 * (x[j] + x[j + 1]);
        log_rho[j] = std::log(dm / width);
    }
    const double lo = x.support_left();
    const double hi = x.support_right();
    auto end_slope = [&](std::size_t a, std::size_t b) {
        return (log_rho[b] - log_rho[a]) / (mid[b] - mid[a]);
    };
    const double slope_left = n > 2 ? end_slope(0, 1) : 0.0;
    const double slope_right = n > 2 ? end_slope(n - 3, n - 2) : 0.0;

    std::vector<double> values(g.n_nodes(), 0.0);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double xi = g.node(i);
        if (xi < lo || xi > hi) continue;
        double lr;
        if (xi <= mid.front()) {
            lr = log_rho.front() + slope_left * (xi - mid.front());
        } else if (xi >= mid.back()) {
            lr = log_rho.back() + slope_right * (xi - mid.back());
        } else {
            while (seg + 2 < mid.size() && mid[seg + 1] < xi) ++seg;
            const double t = (xi - mid[seg]) / (mid[seg + 1] - mid[seg]);
            lr = (1.0 - t) * log_rho[seg] + t * log_rho[seg + 1];
        }
        values[i] = std::exp(lr);
    }
    double mass = gridops::integrate(g, values);
    if (!(mass > 0.0)) {
        // Support narrower than one cell: deposit everything on the nearest node.
        const auto loc = g.locate(0.5 * (x.front() + x.back()));
        const std::size_t i = loc.offset < 0.5 ? loc.cell : loc.cell + 1;
        values[i] = 1.0 / g.weight(i);
        mass = 1.0;
    }
    for (double& value : values) value /= mass;
    return EulerianField(g, std::move(values));
}

/// W_2 via the quantile coupling: sqrt of the midpoint rule for int_0^1 |X - Y|^2 dm.
inline double wasserstein2(const QuantileDensity& x, const QuantileDensity& y) {
    require_same_resolution(x, y);
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - y[j];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(x.size()));
}

inline double mean(const QuantileDensity& x) {
    double sum = 0.0;
    for (double p : x.positions()) sum += p;
    return sum / static_cast<double>(x.size());
}

inline double second_moment(const QuantileDensity& x) {
    double sum = 0.0;
    for (double p : x.positions()) sum += p * p;
    return sum / static_cast<double>(x.size());
}

inline double variance(const QuantileDensity& x) {
    const double m = mean(x);
    double sum = 0.0;
    for (double p : x.positions()) sum += (p - m) * (p - m);
    return sum / static_cast<double>(x.size());
}

struct FieldSamples {
    std::vector<double> values;
    std::vector<double> slopes;
};

/// Piecewise linear interpolation of v at the positions; the slope is the
/// centered difference (v_{i+1} - v_i) / h of the containing cell.
inline FieldSamples sample_field_at(const EulerianField& v, const QuantileDensity& x) {
    const Grid& g = v.grid;
    require_inside(x, g);
    FieldSamples out{std::vector<double>(x.size()), std::vector<double>(x.size())};
    for (std::size_t j = 0; j < x.size(); ++j) {
        const auto loc = g.locate(x[j]);
        const double a = v[loc.cell];
        const double b = v[loc.cell + 1];
        out.values[j] = a + loc.offset * (b - a);
        out.slopes[j] = (b - a) / g.spacing();
    }
    return out;
}

/// Mean of v over the quantile measure, (1/N) sum_j v(X_j).
inline double integrate_against(const EulerianField& v, const QuantileDensity& x) {
    const auto samples = sample_field_at(v, x);
    double sum = 0.0;
    for (double s : samples.values) sum += s;
    return sum / static_cast<double>(x.size());
}

/// Linear (cloud-in-cell) deposition of the particles onto the nodes.
///
/// Adjoint of `sample_field_at`: returns the field d with
/// sum_i weight_i d_i f_i = (1/N) sum_j f(X_j) for every nodal f. Its trapezoid
/// mass is exactly one.
inline EulerianField deposit_to_grid(const QuantileDensity& x, const Grid& g) {
    require_inside(x, g);
    std::vector<double> d(g.n_nodes(), 0.0);
    const double dm = 1.0 / static_cast<double>(x.size());
    for (double p : x.positions()) {
        const auto loc = g.locate(p);
        d[loc.cell] += dm * (1.0 - loc.offset);
        d[loc.cell + 1] += dm * loc.offset;
    }
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= g.weight(i);
    return EulerianField(g, std::move(d));
}

/// sqrt(W_2^2(u, u') + ||v - v'||_{L^2}^2) with the trapezoid L^2 norm.
inline double compound_dist(const State& a, const State& b) {
    require_same_grid(a.v.grid, b.v.grid, "compound_dist");
    const double w2 = wasserstein2(a.u, b.u);
    std::vector<double> dv(a.v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = a.v[i] - b.v[i];
    const double l2sq = gridops::inner(a.v.grid, dv, dv);
    return std::sqrt(w2 * w2 + l2sq);
}

}  // namespace ksjko
