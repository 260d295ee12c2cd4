#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "ksjko/diagnostics.hpp"
#include "ksjko/error.hpp"
#include "ksjko/io/config.hpp"
#include "ksjko/jko.hpp"

namespace ksjko::io {

/// 17 significant digits; NaN and infinities as "nan", "inf", "-inf".
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorKind::IoError, "cannot create directory '" + dir.string() + "'");
    }
}

/// Column-major numeric CSV.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_number(columns[c][r]);
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

/// NaN-safe JSON number (NaN and infinities become null).
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline const std::vector<std::string>& timeseries_header() {
    static const std::vector<std::string> h{"t",         "H",          "L",          "L_u",
                                            "L_v",       "L_star",     "W2_to_eq",   "v_L2_to_eq",
                                            "v_H1_to_eq", "step_dist", "mass",       "m2"};
    return h;
}

/// One column per header entry; equilibrium-relative columns are NaN without `eq`.
inline std::vector<std::vector<double>> timeseries_columns(const JkoTrajectory& traj, const EquilibriumPair* eq,
                                                           const ModelParams& p) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> c(timeseries_header().size());
    const Grid g = p.grid();
    for (std::size_t n = 0; n < traj.size(); ++n) {
        const State& s = traj.states[n];
        c[0].push_back(traj.times[n]);
        c[1].push_back(traj.energies[n].H);
        if (eq != nullptr && n < traj.lyapunov.size()) {
            const auto& l = traj.lyapunov[n];
            c[2].push_back(l.L);
            c[3].push_back(l.L_u);
            c[4].push_back(l.L_v);
            c[5].push_back(l.L_star);
            const auto d = distance_to_equilibrium(s, *eq);
            c[6].push_back(d.w2);
            c[7].push_back(d.v_l2);
            c[8].push_back(d.v_h1);
        } else {
            for (std::size_t k = 2; k <= 8; ++k) c[k].push_back(nan);
        }
        c[9].push_back(n == 0 ? 0.0 : traj.steps[n - 1].step_dist);
        c[10].push_back(gridops::integrate(g, quantiles_to_density(s.u, g).values));
        c[11].push_back(second_moment(s.u));
    }
    return c;
}

/// Snapshot step indices: every `stride`-th iterate plus the last one.
inline std::vector<std::size_t> snapshot_indices(std::size_t n_states, std::size_t stride) {
    std::vector<std::size_t> idx;
    for (std::size_t n = 0; n < n_states; n += stride) idx.push_back(n);
    if (n_states > 0 && idx.back() != n_states - 1) idx.push_back(n_states - 1);
    return idx;
}

/// Writes u_<n>.csv (x,u) and v_<n>.csv (x,v); returns the indices written.
inline std::vector<std::size_t> write_snapshots(const std::filesystem::path& dir, const JkoTrajectory& traj,
                                                const ModelParams& p, std::size_t stride) {
    const Grid g = p.grid();
    const auto x = g.nodes();
    const auto idx = snapshot_indices(traj.size(), stride);
    for (std::size_t n : idx) {
        const auto u = quantiles_to_density(traj.states[n].u, g);
        write_csv(dir / ("u_" + std::to_string(n) + ".csv"), {"x", "u"}, {x, u.values});
        write_csv(dir / ("v_" + std::to_string(n) + ".csv"), {"x", "v"}, {x, traj.states[n].v.values});
    }
    return idx;
}

inline void write_field(const std::filesystem::path& path, const EulerianField& f, const char* name) {
    write_csv(path, {"x", name}, {f.grid.nodes(), f.values});
}

inline Json to_json(const DecayFit& fit) {
    return {{"rate", number(fit.rate)},
            {"intercept", number(fit.intercept)},
            {"t_lo", fit.window.lo},
            {"t_hi", fit.window.hi},
            {"r_squared", number(fit.r_squared)},
            {"n_points", fit.n_points}};
}

}  // namespace ksjko::io
