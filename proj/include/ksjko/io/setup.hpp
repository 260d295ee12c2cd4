#pragma once

#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/io/config.hpp"
#include "ksjko/params.hpp"
#include "ksjko/potential.hpp"
#include "ksjko/quantile.hpp"
#include "ksjko/reference_fd.hpp"

namespace ksjko::io {

/// Numeric CSV with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::ConfigError, "'" + path + "' is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double value = std::strtod(cell.c_str(), &end);
            if (c >= t.columns.size() || end == cell.c_str()) {
                throw Error(ErrorKind::ConfigError, "'" + path + "': malformed row " + std::to_string(row));
            }
            t.columns[c++].push_back(value);
        }
        if (c != t.columns.size()) {
            throw Error(ErrorKind::ConfigError, "'" + path + "': row " + std::to_string(row) + " has " +
                                                    std::to_string(c) + " fields");
        }
    }
    return t;
}

namespace detail {

/// Linear interpolation of tabulated (x, y) at `x`, zero outside the table.
inline double table_lookup(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return ys.back();
    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
    if (k == 0) return ys.front();
    const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + w * (ys[k] - ys[k - 1]);
}

inline CsvTable two_column(const std::string& path) {
    auto t = read_csv(path);
    if (t.columns.size() < 2 || t.columns[0].size() < 2) {
        throw Error(ErrorKind::ConfigError, "'" + path + "' needs two columns and at least two rows");
    }
    for (std::size_t i = 1; i < t.columns[0].size(); ++i) {
        if (!(t.columns[0][i] > t.columns[0][i - 1])) {
            throw Error(ErrorKind::ConfigError, "'" + path + "': x column is not increasing");
        }
    }
    return t;
}

}  // namespace detail

inline PotentialSpec load_potential_table(const std::string& path, const Grid& g) {
    auto t = read_csv(path);
    if (t.columns.size() != 4) {
        throw Error(ErrorKind::ConfigError, "potential table '" + path + "' needs columns x,W,W_x,W_xx");
    }
    if (t.columns[0].size() != g.n_nodes()) {
        throw Error(ErrorKind::ConfigError, "potential table '" + path + "' has " +
                                                std::to_string(t.columns[0].size()) + " rows, the grid has " +
                                                std::to_string(g.n_nodes()) + " nodes");
    }
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        if (std::abs(t.columns[0][i] - g.node(i)) > 1e-9 * g.half_width()) {
            throw Error(ErrorKind::ConfigError, "potential table '" + path + "': row " + std::to_string(i + 2) +
                                                    " is not at grid node " + std::to_string(g.node(i)));
        }
    }
    return PotentialSpec::tabulated(g, std::move(t.columns[1]), std::move(t.columns[2]), std::move(t.columns[3]));
}

inline ModelParams model_params(const RunSpec& s, double chi) {
    ModelParams p;
    p.chi = chi;
    p.kappa = s.kappa;
    p.half_width = s.R;
    p.n_cells = s.n_cells;
    p.n_quantiles = s.N_m;
    if (s.potential.type == "quadratic") {
        p.potential = PotentialSpec::quadratic(s.potential.lambda0);
    } else {
        p.potential = load_potential_table(s.potential.file, p.grid());
    }
    p.validate();
    return p;
}

inline ModelParams model_params(const RunSpec& s) { return model_params(s, s.chi); }

/// Initial density on an arbitrary grid, trapezoid-normalized.
inline EulerianField initial_density(const RunSpec& s, const Grid& g) {
    std::vector<double> u(g.n_nodes(), 0.0);
    if (s.u0.type == "gaussian") {
        const boost::math::normal nd(s.u0.mean, std::sqrt(s.u0.variance));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = boost::math::pdf(nd, g.node(i));
    } else if (s.u0.type == "uniform") {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double x = g.node(i);
            u[i] = (x >= s.u0.a && x <= s.u0.b) ? 1.0 / (s.u0.b - s.u0.a) : 0.0;
        }
    } else {
        const auto t = detail::two_column(s.u0.path);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = detail::table_lookup(t.columns[0], t.columns[1], g.node(i));
    }
    for (double value : u) {
        if (value < 0.0) throw Error(ErrorKind::ConfigError, "'u0': initial density has negative values");
    }
    const double mass = gridops::integrate(g, u);
    if (!(mass > 0.0)) throw Error(ErrorKind::ConfigError, "'u0': initial density has no mass on the grid");
    for (double& value : u) value /= mass;
    return EulerianField(g, std::move(u));
}

/// Initial quantiles: exact inverse CDFs for the closed-form cases.
inline QuantileDensity initial_quantiles(const RunSpec& s, const ModelParams& p) {
    QuantileDensity x = [&] {
        if (s.u0.type == "gaussian") {
            const boost::math::normal nd(s.u0.mean, std::sqrt(s.u0.variance));
            return QuantileDensity::from_quantile_function(s.N_m, [&](double m) { return boost::math::quantile(nd, m); });
        }
        if (s.u0.type == "uniform") {
            return QuantileDensity::from_quantile_function(s.N_m, [&](double m) { return s.u0.a + (s.u0.b - s.u0.a) * m; });
        }
        return density_to_quantiles(initial_density(s, p.grid()), s.N_m);
    }();
    require_inside(x, p.grid());
    return x;
}

inline EulerianField initial_field(const RunSpec& s, const Grid& g) {
    std::vector<double> v(g.n_nodes(), 0.0);
    if (s.v0.type == "gaussian-bump") {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double z = (g.node(i) - s.v0.center) / s.v0.width;
            v[i] = s.v0.amplitude * std::exp(-0.5 * z * z);
        }
    } else if (s.v0.type == "file") {
        const auto t = detail::two_column(s.v0.path);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::table_lookup(t.columns[0], t.columns[1], g.node(i));
    }
    return EulerianField(g, std::move(v));
}

inline State initial_state(const RunSpec& s, const ModelParams& p) {
    return State{initial_quantiles(s, p), initial_field(s, p.grid())};
}

inline FdConfig fd_config(const RunSpec& s) {
    FdConfig c;
    c.dt = s.fd.dt;
    c.flux = s.fd.flux == "upwind" ? FluxScheme::Upwind : FluxScheme::Central;
    return c;
}

/// Model parameters on the FD grid (finer when fd.n_cells is set).
inline ModelParams fd_params(const RunSpec& s, const ModelParams& p) {
    ModelParams q = p;
    if (s.fd.n_cells != 0 && s.fd.n_cells != p.n_cells) {
        if (!p.potential.is_quadratic()) {
            throw Error(ErrorKind::ConfigError, "'fd.n_cells': a tabulated potential fixes the grid");
        }
        q.n_cells = s.fd.n_cells;
    }
    return q;
}

}  // namespace ksjko::io
