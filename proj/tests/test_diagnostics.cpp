#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "ksjko/diagnostics.hpp"
#include "ksjko/random_states.hpp"
#include "ksjko/reference_fd.hpp"

using namespace ksjko;

namespace {

QuantileDensity normal_quantiles(std::size_t n, double mean, double sd) {
    const boost::math::normal nd(mean, sd);
    return QuantileDensity::from_quantile_function(n, [&](double m) { return boost::math::quantile(nd, m); });
}

template <class Fn>
void expect_kind(ErrorKind kind, Fn&& fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

const ModelParams& decoupled() {
    static const auto p = ModelParams::quadratic(0.0, 1.0, 1.0);
    return p;
}

const EquilibriumPair& decoupled_eq() {
    static const auto eq = solve_equilibrium(decoupled());
    return eq;
}

}  // namespace

TEST(FitDecayRate, ExactExponential) {
    std::vector<double> t, y;
    for (int k = 0; k < 10; ++k) {
        t.push_back(0.3 * k);
        y.push_back(std::exp(-2.0 * t.back()));
    }
    const auto fit = fit_decay_rate(t, y, TimeWindow{0.0, 10.0});
    EXPECT_NEAR(fit.rate, 2.0, 1e-10);
    EXPECT_NEAR(fit.intercept, 0.0, 1e-10);
    EXPECT_EQ(fit.n_points, 10u);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(FitDecayRate, ConstantSeries) {
    const std::vector<double> t{0, 1, 2, 3, 4}, y(5, 0.7);
    EXPECT_NEAR(fit_decay_rate(t, y, TimeWindow{0.0, 4.0}).rate, 0.0, 1e-15);
}

TEST(FitDecayRate, NoisyExponential) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> t, y;
    for (int k = 0; k <= 200; ++k) {
        t.push_back(0.025 * k);
        y.push_back(std::exp(-t.back()) * (1.0 + 0.01 * noise(rng)));
    }
    EXPECT_NEAR(fit_decay_rate(t, y, TimeWindow{0.0, 5.0}).rate, 1.0, 0.05);
}

TEST(FitDecayRate, DefaultWindowSkipsTransient) {
    std::vector<double> t, y;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.05 * k);
        y.push_back(std::exp(-3.0 * t.back()) + 4.0 * std::exp(-20.0 * t.back()));
    }
    const auto fit = fit_decay_rate(t, y);
    EXPECT_GT(fit.window.lo, 0.0);
    EXPECT_NEAR(fit.rate, 3.0, 0.05);
}

TEST(FitDecayRate, Errors) {
    const std::vector<double> t{0, 1, 2}, y{1.0, -0.5, 0.2};
    expect_kind(ErrorKind::InvalidSeries, [&] { fit_decay_rate(t, y, TimeWindow{0.0, 2.0}); });
    const std::vector<double> t2{0, 1}, y2{1.0, 0.5};
    expect_kind(ErrorKind::InsufficientData, [&] { fit_decay_rate(t2, y2, TimeWindow{0.0, 2.0}); });
    const std::vector<double> t3{0, 1, 2, 3}, y3{1.0, 0.5, 0.25, 0.125};
    expect_kind(ErrorKind::InsufficientData, [&] { fit_decay_rate(t3, y3, TimeWindow{2.5, 3.0}); });
}

TEST(CsiszarKullback, Equilibrium) {
    const auto r = csiszar_kullback_check(decoupled_eq().u_quantiles, decoupled_eq(), decoupled());
    EXPECT_EQ(r.l1_sq, 0.0);
    EXPECT_NEAR(r.bound, 0.0, 1e-12);
    EXPECT_TRUE(r.satisfied);
}

TEST(CsiszarKullback, ShiftedGaussian) {
    const auto& p = decoupled();
    const auto r = csiszar_kullback_check(normal_quantiles(p.n_quantiles, 0.5, 1.0), decoupled_eq(), p);
    // L_u is the relative entropy of N(0.5, 1) to N(0, 1), mu^2 / 2.
    EXPECT_NEAR(r.bound, 2.0 * 0.125, 0.02 * 0.25);
    // ||N(mu,1) - N(0,1)||_1 = 2 (2 Phi(mu/2) - 1).
    const double l1 = 2.0 * (2.0 * boost::math::cdf(boost::math::normal(), 0.25) - 1.0);
    EXPECT_NEAR(r.l1_sq, l1 * l1, 1e-3);
    EXPECT_LE(r.l1_sq / r.bound, 1.0);
    EXPECT_TRUE(r.satisfied);
}

TEST(CsiszarKullback, Uniform) {
    const auto& p = decoupled();
    const auto x = QuantileDensity::from_quantile_function(p.n_quantiles, [](double m) { return 2.0 * m - 1.0; });
    const auto r = csiszar_kullback_check(x, decoupled_eq(), p);
    EXPECT_TRUE(r.satisfied);
    EXPECT_LT(r.l1_sq, r.bound);
}

TEST(Sandwich, EquilibriumIsTight) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0);
    const auto eq = solve_equilibrium(p);
    const auto r = sandwich_check(eq.state(), eq, p);
    EXPECT_NEAR(r.lower_u, 0.0, 1e-12);
    EXPECT_NEAR(r.L_u, 0.0, 1e-8);
    // The reconstructed density carries an O(1/N) Fisher floor, so the upper bound is small but not zero.
    EXPECT_GE(r.upper_u, 0.0);
    EXPECT_LT(r.upper_u, 1.0 / static_cast<double>(p.n_quantiles));
    EXPECT_EQ(r.lower_v, 0.0);
    EXPECT_EQ(r.L_v, 0.0);
    EXPECT_EQ(r.upper_v, 0.0);
    EXPECT_TRUE(r.holds());
}

TEST(Sandwich, ShiftedGaussianChainCollapses) {
    const auto& p = decoupled();
    const double mu = 0.5;
    const State s{normal_quantiles(p.n_quantiles, mu, 1.0), decoupled_eq().v_inf};
    const auto r = sandwich_check(s, decoupled_eq(), p);
    const double target = 0.5 * mu * mu;
    EXPECT_NEAR(r.lower_u, target, 0.02 * target);
    EXPECT_NEAR(r.L_u, target, 0.02 * target);
    EXPECT_NEAR(r.upper_u, target, 0.02 * target);
    EXPECT_TRUE(r.holds());
}

TEST(Sandwich, RandomStates) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0);
    const auto eq = solve_equilibrium(p);
    RandomStateGenerator gen(17);
    for (int k = 0; k < 20; ++k) {
        const auto r = sandwich_check(gen.perturbed(eq, p), eq, p);
        EXPECT_TRUE(r.holds()) << k << ": " << r.margin_lower_u() << ' ' << r.margin_upper_u() << ' '
                               << r.margin_lower_v() << ' ' << r.margin_upper_v();
    }
}

TEST(Sandwich, ReportsLostConvexity) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 100, 20);
    const Grid g = p.grid();
    EquilibriumPair eq = solve_equilibrium(p);
    // A v_inf whose curvature exceeds lambda0 / chi somewhere.
    auto strong = p;
    strong.chi = 1.0;
    eq.v_inf = EulerianField::sample(g, [](double x) { return 3.0 * std::exp(-x * x); });
    expect_kind(ErrorKind::ConvexityLost, [&] { sandwich_check(eq.state(), eq, strong); });
}

TEST(Compare, IdenticalTrajectoriesHaveNoGap) {
    const auto p = ModelParams::quadratic(0.05, 1.0, 1.0, 400, 200);
    const auto eq = solve_equilibrium(p);
    const Grid g = p.grid();
    const auto x0 = normal_quantiles(200, 1.0, 1.0);
    const auto v0 = EulerianField::zeros(g);
    const auto jko = evolve(State{x0, v0}, 0.05, 0.2, p, InnerSolverConfig{}, &eq);
    FdTrajectory fd;
    fd.dt = 0.05;
    for (std::size_t n = 0; n < jko.size(); ++n) {
        fd.steps.push_back(n);
        fd.times.push_back(jko.times[n]);
        // Round trip through the resampled density so the FD record is exactly representable.
        fd.u.push_back(quantiles_to_density(jko.states[n].u, g));
        fd.v.push_back(jko.states[n].v);
    }
    const auto report = compare_trajectories(jko, fd, eq);
    ASSERT_EQ(report.times.size(), jko.size());
    EXPECT_EQ(report.sup_u_l1, 0.0);
    EXPECT_LT(report.sup_v_l2, 1e-13);
    EXPECT_LT(report.sup_v_h1, 1e-12);
    // Quantiles of the resampled density, not the particles: the outermost ones drift by about a tail gap,
    // which leaves a W2 floor decaying like N^(-1/2).
    EXPECT_LT(report.sup_w2, 0.02);
}

TEST(Compare, MissingRecordIsAParameterMismatch) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 100, 20);
    const Grid g = p.grid();
    const auto eq = solve_equilibrium(p);
    const auto jko = evolve(eq.state(), 0.05, 0.1, p, InnerSolverConfig{}, &eq);
    FdConfig cfg;
    cfg.dt = 0.01;
    cfg.record_stride = 10;  // keeps steps 0 and 10, while t = 0.05 needs step 5
    const auto fd = fd_evolve(eq.u_inf, EulerianField::zeros(g), cfg, 0.1, p);
    try {
        compare_trajectories(jko, fd, eq);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("parameter mismatch"), std::string::npos);
    }
}

TEST(DistanceToEquilibrium, ZeroAtEquilibrium) {
    const auto d = distance_to_equilibrium(decoupled_eq().state(), decoupled_eq());
    EXPECT_EQ(d.total(), 0.0);
    EXPECT_EQ(d.v_l2, 0.0);
}

TEST(Certificate, DecoupledRate) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 400, 200);
    const auto eq = solve_equilibrium(p);
    const Grid g = p.grid();
    const State s0{normal_quantiles(200, 1.0, 1.0),
                   EulerianField::sample(g, [](double x) { return 0.3 * std::exp(-0.5 * x * x); })};
    const auto traj = evolve(s0, 0.02, 5.0, p, InnerSolverConfig{}, &eq);
    ASSERT_FALSE(traj.failure);
    const auto c = theorem2_certificate(traj, eq, p);
    EXPECT_GE(c.rate, 0.9);
    EXPECT_LE(c.rate, 1.1);
    EXPECT_TRUE(c.L_strictly_decreasing);
    EXPECT_TRUE(c.envelope_satisfied);
    EXPECT_EQ(c.reference_rate, 1.0);
}

TEST(Certificate, SingleStepIsInsufficient) {
    const auto& p = decoupled();
    const State s0{normal_quantiles(p.n_quantiles, 1.0, 1.0), EulerianField::zeros(p.grid())};
    const auto traj = evolve(s0, 0.01, 0.01, p, InnerSolverConfig{}, &decoupled_eq());
    ASSERT_EQ(traj.size(), 2u);
    expect_kind(ErrorKind::InsufficientData, [&] { theorem2_certificate(traj, decoupled_eq(), p); });
}

TEST(Certificate, NoDecayIsInsufficient) {
    const auto& p = decoupled();
    const State s0{normal_quantiles(p.n_quantiles, 1.0, 1.0), EulerianField::zeros(p.grid())};
    const auto traj = evolve(s0, 0.01, 0.05, p, InnerSolverConfig{}, &decoupled_eq());
    expect_kind(ErrorKind::InsufficientData, [&] { theorem2_certificate(traj, decoupled_eq(), p); });
}
