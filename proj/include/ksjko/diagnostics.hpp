#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ksjko/energetics.hpp"
#include "ksjko/equilibrium.hpp"
#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/jko.hpp"
#include "ksjko/params.hpp"
#include "ksjko/quantile.hpp"
#include "ksjko/reference_fd.hpp"

namespace ksjko {

struct TimeWindow {
    double lo = 0.0;
    double hi = 0.0;
};

/// Exponential fit value ~ exp(intercept - rate * t) over a window.
struct DecayFit {
    double rate = 0.0;
    double intercept = 0.0;
    TimeWindow window;
    double r_squared = 1.0;
    std::size_t n_points = 0;
    std::vector<double> residuals;  ///< log-space residuals of the points in the window
};

/// Least-squares slope of log(value) against time, negated.
inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values, TimeWindow window) {
    if (times.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "series length mismatch");
    if (!(window.hi >= window.lo)) throw Error(ErrorKind::InvalidArgument, "empty fit window");
    std::vector<double> t, y;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < window.lo || times[k] > window.hi) continue;
        if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
            throw Error(ErrorKind::InvalidSeries, "nonpositive value " + std::to_string(values[k]) + " at t = " +
                                                      std::to_string(times[k]) + " inside the fit window");
        }
        t.push_back(times[k]);
        y.push_back(std::log(values[k]));
    }
    if (t.size() < 3) {
        throw Error(ErrorKind::InsufficientData, "fit window holds " + std::to_string(t.size()) + " points, need 3");
    }
    const double n = static_cast<double>(t.size());
    double tm = 0.0, ym = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        tm += t[k];
        ym += y[k];
    }
    tm /= n;
    ym /= n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        stt += (t[k] - tm) * (t[k] - tm);
        sty += (t[k] - tm) * (y[k] - ym);
        syy += (y[k] - ym) * (y[k] - ym);
    }
    if (!(stt > 0.0)) throw Error(ErrorKind::InsufficientData, "fit window has no time spread");
    DecayFit fit;
    const double slope = sty / stt;
    fit.rate = -slope;
    fit.intercept = ym - slope * tm;
    fit.window = window;
    fit.n_points = t.size();
    double sse = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = y[k] - (fit.intercept + slope * t[k]);
        fit.residuals.push_back(r);
        sse += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

/// From the first time the series is at most half its initial value up to the
/// first time it is at most 1e-8 of it (or the end of the series).
inline TimeWindow default_fit_window(std::span<const double> times, std::span<const double> values) {
    if (times.empty() || times.size() != values.size()) throw Error(ErrorKind::InsufficientData, "empty series");
    const double v0 = values[0];
    TimeWindow w{times.front(), times.back()};
    std::size_t k = 0;
    while (k < values.size() && values[k] > 0.5 * v0) ++k;
    if (k == values.size()) return w;
    w.lo = times[k];
    for (std::size_t j = k; j < values.size(); ++j) {
        if (values[j] <= 1e-8 * v0) {
            w.hi = times[j];
            break;
        }
    }
    return w;
}

inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values) {
    return fit_decay_rate(times, values, default_fit_window(times, values));
}

/// L^1 distance of two quantile densities after resampling both onto `g`.
inline double l1_distance(const QuantileDensity& a, const QuantileDensity& b, const Grid& g) {
    const auto ua = quantiles_to_density(a, g);
    const auto ub = quantiles_to_density(b, g);
    std::vector<double> d(ua.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = ua[i] - ub[i];
    return gridops::l1_norm(g, d);
}

struct CsiszarKullbackResult {
    double l1_sq = 0.0;
    double bound = 0.0;  ///< 2 L_u
    bool satisfied = true;
};

/// ||u - u_inf||_{L^1}^2 against the Pinsker bound 2 L_u(u).
inline CsiszarKullbackResult csiszar_kullback_check(const QuantileDensity& u, const EquilibriumPair& eq,
                                                    const ModelParams& p) {
    const State s{u, eq.v_inf};
    const auto parts = lyapunov_parts(s, eq, p);
    CsiszarKullbackResult r;
    const double l1 = l1_distance(u, eq.u_quantiles, p.grid());
    r.l1_sq = l1 * l1;
    r.bound = 2.0 * parts.L_u;
    r.satisfied = r.l1_sq <= r.bound + 1e-6 * (1.0 + std::abs(r.bound));
    return r;
}

/// The four convexity bounds around L_u and L_v.
struct SandwichReport {
    double lambda_eps = 0.0;
    double kappa = 0.0;
    double lower_u = 0.0;  ///< lambda_eps / 2 * W_2^2(u, u_inf)
    double L_u = 0.0;
    double upper_u = 0.0;  ///< Fisher / (2 lambda_eps)
    double lower_v = 0.0;  ///< kappa / 2 * ||v - v_inf||^2
    double L_v = 0.0;
    double upper_v = 0.0;  ///< dissipation_v / (2 kappa)

    double margin_lower_u() const { return L_u - lower_u; }
    double margin_upper_u() const { return upper_u - L_u; }
    double margin_lower_v() const { return L_v - lower_v; }
    double margin_upper_v() const { return upper_v - L_v; }

    /// Every margin at least -slack * (1 + L) of its own component.
    bool holds(double slack = 1e-4) const {
        const double su = slack * (1.0 + std::abs(L_u));
        const double sv = slack * (1.0 + std::abs(L_v));
        return margin_lower_u() >= -su && margin_upper_u() >= -su && margin_lower_v() >= -sv &&
               margin_upper_v() >= -sv;
    }
};

inline SandwichReport sandwich_check(const State& s, const EquilibriumPair& eq, const ModelParams& p) {
    if (!(p.kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "the sandwich bounds need kappa > 0");
    const auto weps = perturbed_potential(p, eq);
    if (!(weps.lambda_eps > 0.0)) {
        throw Error(ErrorKind::ConvexityLost, "perturbed potential has min curvature " +
                                                  std::to_string(weps.lambda_eps) + "; chi is too large");
    }
    const auto parts = lyapunov_parts(s, eq, p);
    SandwichReport r;
    r.lambda_eps = weps.lambda_eps;
    r.kappa = p.kappa;
    const double w2 = wasserstein2(s.u, eq.u_quantiles);
    r.lower_u = 0.5 * weps.lambda_eps * w2 * w2;
    r.L_u = parts.L_u;
    r.upper_u = fisher_dissipation_u(s.u, weps.spec, p.grid()) / (2.0 * weps.lambda_eps);
    std::vector<double> dv(s.v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = s.v[i] - eq.v_inf[i];
    r.lower_v = 0.5 * p.kappa * gridops::inner(s.v.grid, dv, dv);
    r.L_v = parts.L_v;
    r.upper_v = dissipation_v(s.v, eq, p.kappa) / (2.0 * p.kappa);
    return r;
}

struct ComparisonReport {
    std::vector<double> times;
    std::vector<double> w2;     ///< W_2(u_jko, u_fd)
    std::vector<double> u_l1;   ///< on the FD grid
    std::vector<double> v_l2;
    std::vector<double> v_h1;
    std::vector<double> jko_w2_to_eq;
    std::vector<double> fd_w2_to_eq;
    double sup_w2 = 0.0;
    double sup_u_l1 = 0.0;
    double sup_v_l2 = 0.0;
    double sup_v_h1 = 0.0;
};

namespace detail {

inline std::vector<double> interpolate_to(const EulerianField& f, const Grid& target) {
    std::vector<double> out(target.n_nodes());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = target.node(i);
        const auto loc = f.grid.locate(x);
        out[i] = f[loc.cell] + loc.offset * (f[loc.cell + 1] - f[loc.cell]);
    }
    return out;
}

}  // namespace detail

/// Gaps between the JKO iterates and the FD oracle, the latter taken at step
/// ceil(t / dt) for every JKO time t.
inline ComparisonReport compare_trajectories(const JkoTrajectory& jko, const FdTrajectory& fd,
                                             const EquilibriumPair& eq) {
    if (jko.size() == 0 || fd.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty trajectory");
    const Grid& fine = fd.u.front().grid;
    const Grid& coarse = jko.states.front().v.grid;
    if (fine.half_width() != coarse.half_width()) {
        throw Error(ErrorKind::InvalidArgument, "parameter mismatch: JKO and FD domains differ");
    }
    ComparisonReport r;
    const std::size_t nq = jko.states.front().u.size();
    for (std::size_t n = 0; n < jko.size(); ++n) {
        const double t = jko.times[n];
        const auto idx = fd.record_at(t);
        if (!idx) {
            throw Error(ErrorKind::InvalidArgument,
                        "parameter mismatch: FD trajectory has no record for t = " + std::to_string(t));
        }
        const State& s = jko.states[n];
        const auto& fu = fd.u[*idx];
        const auto& fv = fd.v[*idx];
        const auto fq = density_to_quantiles(fu, nq);
        r.times.push_back(t);
        r.w2.push_back(wasserstein2(s.u, fq));
        const auto ju = quantiles_to_density(s.u, fine);
        std::vector<double> du(fine.n_nodes());
        for (std::size_t i = 0; i < du.size(); ++i) du[i] = ju[i] - fu[i];
        r.u_l1.push_back(gridops::l1_norm(fine, du));
        auto jv = detail::interpolate_to(s.v, fine);
        for (std::size_t i = 0; i < jv.size(); ++i) jv[i] -= fv[i];
        r.v_l2.push_back(gridops::l2_norm(fine, jv));
        r.v_h1.push_back(gridops::h1_norm(fine, jv));
        if (eq.u_quantiles.size() == nq) {
            r.jko_w2_to_eq.push_back(wasserstein2(s.u, eq.u_quantiles));
            r.fd_w2_to_eq.push_back(wasserstein2(fq, eq.u_quantiles));
        }
    }
    r.sup_w2 = *std::max_element(r.w2.begin(), r.w2.end());
    r.sup_u_l1 = *std::max_element(r.u_l1.begin(), r.u_l1.end());
    r.sup_v_l2 = *std::max_element(r.v_l2.begin(), r.v_l2.end());
    r.sup_v_h1 = *std::max_element(r.v_h1.begin(), r.v_h1.end());
    return r;
}

/// Distance of a state to the equilibrium in the four norms of the decay estimate.
struct EquilibriumDistance {
    double u_l1 = 0.0;
    double w2 = 0.0;
    double v_sup = 0.0;
    double v_h1 = 0.0;
    double v_l2 = 0.0;

    double total() const noexcept { return u_l1 + w2 + v_sup + v_h1; }
};

inline EquilibriumDistance distance_to_equilibrium(const State& s, const EquilibriumPair& eq) {
    EquilibriumDistance d;
    const Grid& g = eq.grid();
    d.u_l1 = l1_distance(s.u, eq.u_quantiles, g);
    d.w2 = wasserstein2(s.u, eq.u_quantiles);
    std::vector<double> dv(s.v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = s.v[i] - eq.v_inf[i];
    d.v_sup = gridops::sup_norm(dv);
    d.v_h1 = gridops::h1_norm(g, dv);
    d.v_l2 = gridops::l2_norm(g, dv);
    return d;
}

/// Measured counterpart of the exponential convergence estimate.
struct Theorem2Certificate {
    DecayFit fit;                 ///< fit of the L series
    double rate_L = 0.0;          ///< fitted decay rate of L
    double rate = 0.0;            ///< rate_L / 2, compared with the convergence rate of the distances
    double reference_rate = 0.0;  ///< min(kappa, lambda0)
    double lambda_eps = 0.0;
    double entropy_gap = 0.0;     ///< H(u0, v0) - H(eq)
    double prefactor = 0.0;       ///< C fitted on the first half of the run
    double envelope_band = 0.05;
    std::vector<double> times;
    std::vector<double> lhs;
    std::vector<double> envelope;
    double max_envelope_ratio = 0.0;  ///< max lhs / envelope over all sampled times
    bool envelope_satisfied = false;
    bool L_strictly_decreasing = false;
};

/// Fits the L decay rate, then calibrates the prefactor C of
/// lhs(t) <= C (H0 - H_inf)^{1/2} exp(-rate t) on t <= T/2 and checks the
/// envelope, widened by `envelope_band`, at every sampled time.
inline Theorem2Certificate theorem2_certificate(const JkoTrajectory& traj, const EquilibriumPair& eq,
                                                const ModelParams& p, double decrease_tol = 1e-12) {
    if (traj.size() < 3 || traj.lyapunov.size() != traj.size()) {
        throw Error(ErrorKind::InsufficientData, "trajectory too short or without Lyapunov reports");
    }
    std::vector<double> L(traj.size());
    for (std::size_t n = 0; n < L.size(); ++n) L[n] = traj.lyapunov[n].L;
    const double smallest = *std::min_element(L.begin(), L.end());
    if (!(L.front() > 0.0) || !(smallest <= 0.1 * L.front())) {
        throw Error(ErrorKind::InsufficientData, "L has not dropped by a factor of 10 along the trajectory");
    }
    Theorem2Certificate c;
    c.fit = fit_decay_rate(traj.times, L);
    c.rate_L = c.fit.rate;
    c.rate = 0.5 * c.rate_L;
    c.reference_rate = std::min(p.kappa, p.lambda0());
    c.lambda_eps = perturbed_potential(p, eq).lambda_eps;
    c.L_strictly_decreasing = true;
    for (std::size_t n = 1; n < L.size(); ++n) {
        if (!(L[n] < L[n - 1] + decrease_tol)) c.L_strictly_decreasing = false;
    }
    c.entropy_gap = traj.energies.front().H - entropy(eq.state(), p).H;
    const double root_gap = std::sqrt(std::max(c.entropy_gap, 0.0));
    const double t_end = traj.times.back();
    c.times = traj.times;
    for (const auto& s : traj.states) c.lhs.push_back(distance_to_equilibrium(s, eq).total());
    double cmax = 0.0;
    for (std::size_t n = 0; n < c.times.size(); ++n) {
        if (c.times[n] > 0.5 * t_end) break;
        cmax = std::max(cmax, c.lhs[n] * std::exp(c.rate * c.times[n]));
    }
    c.prefactor = root_gap > 0.0 ? cmax / root_gap : 0.0;
    c.envelope_satisfied = root_gap > 0.0;
    for (std::size_t n = 0; n < c.times.size(); ++n) {
        const double env = c.prefactor * root_gap * std::exp(-c.rate * c.times[n]);
        c.envelope.push_back(env);
        const double ratio = env > 0.0 ? c.lhs[n] / env : std::numeric_limits<double>::infinity();
        c.max_envelope_ratio = std::max(c.max_envelope_ratio, ratio);
    }
    c.envelope_satisfied = c.envelope_satisfied && c.max_envelope_ratio <= 1.0 + c.envelope_band;
    return c;
}

}  // namespace ksjko
