#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/tridiag.hpp"

namespace ksjko {

/// Uniform grid on [-R, R] with nodes x_i = -R + i*h, h = 2R / n_cells.
class Grid {
public:
    static Grid uniform(double half_width, std::size_t n_cells) {
        if (!(half_width > 0.0) || !std::isfinite(half_width)) {
            throw Error(ErrorKind::InvalidArgument, "grid half width must be positive, got " + std::to_string(half_width));
        }
        if (n_cells < 2) {
            throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 cells, got " + std::to_string(n_cells));
        }
        return Grid(half_width, n_cells);
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t n_cells() const noexcept { return n_cells_; }
    std::size_t n_nodes() const noexcept { return n_cells_ + 1; }
    double spacing() const noexcept { return spacing_; }
    double left() const noexcept { return -half_width_; }
    double right() const noexcept { return half_width_; }

    double node(std::size_t i) const noexcept {
        // Mirror the symmetric layout exactly so that node(n-i) == -node(i).
        if (2 * i > n_cells_) return half_width_ - static_cast<double>(n_cells_ - i) * spacing_;
        return -half_width_ + static_cast<double>(i) * spacing_;
    }

    std::vector<double> nodes() const {
        std::vector<double> x(n_nodes());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = node(i);
        return x;
    }

    /// Trapezoid quadrature weight of node i (h inside, h/2 at the two ends).
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i == n_cells_) ? 0.5 * spacing_ : spacing_;
    }

    bool contains(double x) const noexcept { return x >= -half_width_ && x <= half_width_; }

    struct Location {
        std::size_t cell;  ///< index of the left node
        double offset;     ///< (x - x_cell) / h in [0, 1]
    };

    /// Cell containing x; caller guarantees `contains(x)`.
    Location locate(double x) const noexcept {
        double s = (x + half_width_) / spacing_;
        auto cell = static_cast<std::ptrdiff_t>(std::floor(s));
        cell = std::clamp<std::ptrdiff_t>(cell, 0, static_cast<std::ptrdiff_t>(n_cells_) - 1);
        return {static_cast<std::size_t>(cell), s - static_cast<double>(cell)};
    }

    bool operator==(const Grid& other) const noexcept {
        return half_width_ == other.half_width_ && n_cells_ == other.n_cells_;
    }

private:
    Grid(double half_width, std::size_t n_cells)
        : half_width_(half_width), n_cells_(n_cells), spacing_(2.0 * half_width / static_cast<double>(n_cells)) {}

    double half_width_;
    std::size_t n_cells_;
    double spacing_;
};

/// Node values of a function on a grid.
struct EulerianField {
    Grid grid;
    std::vector<double> values;

    EulerianField(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.n_nodes()) {
            throw Error(ErrorKind::GridMismatch, "field has " + std::to_string(values.size()) + " values for " +
                                                     std::to_string(grid.n_nodes()) + " nodes");
        }
        for (double value : values) {
            if (!std::isfinite(value)) throw Error(ErrorKind::InvalidArgument, "field contains a non-finite value");
        }
    }

    static EulerianField zeros(const Grid& g) { return EulerianField(g, std::vector<double>(g.n_nodes(), 0.0)); }

    template <class F>
    static EulerianField sample(const Grid& g, F&& f) {
        std::vector<double> v(g.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g.node(i));
        return EulerianField(g, std::move(v));
    }

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* context) {
    if (!(a == b)) throw Error(ErrorKind::GridMismatch, std::string(context) + ": fields live on different grids");
}

namespace gridops {

inline double integrate(const Grid& g, std::span<const double> f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += g.weight(i) * f[i];
    return sum;
}

inline double inner(const Grid& g, std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += g.weight(i) * a[i] * b[i];
    return sum;
}

inline double l1_norm(const Grid& g, std::span<const double> f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += g.weight(i) * std::abs(f[i]);
    return sum;
}

inline double l2_norm(const Grid& g, std::span<const double> f) { return std::sqrt(inner(g, f, f)); }

inline double sup_norm(std::span<const double> f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

/// sum over cells of h * ((f_{i+1} - f_i) / h)^2, the discrete ||f_x||^2.
inline double gradient_norm_sq(const Grid& g, std::span<const double> f) {
    const double h = g.spacing();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double d = f[i + 1] - f[i];
        sum += d * d / h;
    }
    return sum;
}

inline double h1_norm(const Grid& g, std::span<const double> f) {
    return std::sqrt(inner(g, f, f) + gradient_norm_sq(g, f));
}

/// Three-point second difference with homogeneous Neumann closure (ghost f_{-1} = f_1).
inline std::vector<double> neumann_laplacian(const Grid& g, std::span<const double> f) {
    const std::size_t n = f.size();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> out(n);
    out[0] = 2.0 * (f[1] - f[0]) * inv_h2;
    out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) * inv_h2;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * inv_h2;
    return out;
}

/// Solves shift * f - D2 f = rhs with the Neumann second difference above.
///
/// The system is the lumped-mass form of (shift*M + K) f = M rhs, where K is the
/// stiffness matrix of ||f_x||^2 / 2; for shift > 0 it is SPD.
inline std::vector<double> solve_shifted_neumann(const Grid& g, double shift, std::span<const double> rhs) {
    if (!(shift > 0.0)) throw Error(ErrorKind::InvalidArgument, "shifted Neumann solve needs a positive shift");
    const std::size_t n = rhs.size();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> lower(n, -inv_h2), diag(n, shift + 2.0 * inv_h2), upper(n, -inv_h2);
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    upper[0] = -2.0 * inv_h2;
    lower[n - 1] = -2.0 * inv_h2;
    return solve_tridiagonal(lower, diag, upper, rhs);
}

}  // namespace gridops

}  // namespace ksjko
