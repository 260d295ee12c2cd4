#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"

namespace ksjko {

/// Confinement potential: either W(x) = lambda0 x^2 / 2 or a node table of (W, W_x, W_xx).
///
/// Tables are evaluated by cubic Hermite interpolation of (W, W_x), so value and
/// slope are mutually consistent; the curvature interpolates the W_xx column
/// linearly and only feeds Newton Hessians and convexity reports.
class PotentialSpec {
public:
    struct Quadratic {
        double lambda0;
        bool operator==(const Quadratic&) const = default;
    };
    struct Tabulated {
        Grid grid;
        std::vector<double> w, wx, wxx;
        bool operator==(const Tabulated&) const = default;
    };

    static PotentialSpec quadratic(double lambda0) {
        if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) {
            throw Error(ErrorKind::InvalidArgument, "lambda0 must be positive");
        }
        return PotentialSpec(Quadratic{lambda0});
    }

    static PotentialSpec tabulated(const Grid& g, std::vector<double> w, std::vector<double> wx,
                                   std::vector<double> wxx) {
        if (w.size() != g.n_nodes() || wx.size() != g.n_nodes() || wxx.size() != g.n_nodes()) {
            throw Error(ErrorKind::GridMismatch, "potential table does not match the grid");
        }
        for (auto* col : {&w, &wx, &wxx}) {
            for (double value : *col) {
                if (!std::isfinite(value)) throw Error(ErrorKind::InvalidArgument, "non-finite potential table entry");
            }
        }
        return PotentialSpec(Tabulated{g, std::move(w), std::move(wx), std::move(wxx)});
    }

    bool is_quadratic() const noexcept { return std::holds_alternative<Quadratic>(spec_); }
    const Quadratic* as_quadratic() const noexcept { return std::get_if<Quadratic>(&spec_); }
    const Tabulated* as_tabulated() const noexcept { return std::get_if<Tabulated>(&spec_); }

    /// Points where the potential can be evaluated.
    bool defined_at(double x) const noexcept {
        if (const auto* t = as_tabulated()) return t->grid.contains(x);
        return std::isfinite(x);
    }

    double value(double x) const {
        if (const auto* q = as_quadratic()) return 0.5 * q->lambda0 * x * x;
        const auto& t = table_at(x);
        const auto loc = t.grid.locate(x);
        const double h = t.grid.spacing();
        const double s = loc.offset;
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s * s * (3.0 - 2.0 * s);
        const double h11 = s * s * (s - 1.0);
        const std::size_t i = loc.cell;
        return h00 * t.w[i] + h10 * h * t.wx[i] + h01 * t.w[i + 1] + h11 * h * t.wx[i + 1];
    }

    double slope(double x) const {
        if (const auto* q = as_quadratic()) return q->lambda0 * x;
        const auto& t = table_at(x);
        const auto loc = t.grid.locate(x);
        const double h = t.grid.spacing();
        const double s = loc.offset;
        const double d00 = 6.0 * s * (s - 1.0);
        const double d10 = (1.0 - s) * (1.0 - 3.0 * s);
        const double d01 = -d00;
        const double d11 = s * (3.0 * s - 2.0);
        const std::size_t i = loc.cell;
        return (d00 * t.w[i] + d01 * t.w[i + 1]) / h + d10 * t.wx[i] + d11 * t.wx[i + 1];
    }

    double curvature(double x) const {
        if (const auto* q = as_quadratic()) return q->lambda0;
        const auto& t = table_at(x);
        const auto loc = t.grid.locate(x);
        return (1.0 - loc.offset) * t.wxx[loc.cell] + loc.offset * t.wxx[loc.cell + 1];
    }

    /// Smallest W_xx over the nodes of `g` (lambda0 for the quadratic case).
    double min_curvature(const Grid& g) const {
        if (const auto* q = as_quadratic()) return q->lambda0;
        const auto& t = *as_tabulated();
        require_same_grid(t.grid, g, "min_curvature");
        return *std::min_element(t.wxx.begin(), t.wxx.end());
    }

    bool operator==(const PotentialSpec&) const = default;

private:
    explicit PotentialSpec(std::variant<Quadratic, Tabulated> spec) : spec_(std::move(spec)) {}

    const Tabulated& table_at(double x) const {
        const auto& t = std::get<Tabulated>(spec_);
        if (!t.grid.contains(x)) {
            throw Error(ErrorKind::DomainOverflow, "potential table queried at x = " + std::to_string(x));
        }
        return t;
    }

    std::variant<Quadratic, Tabulated> spec_;
};

}  // namespace ksjko
