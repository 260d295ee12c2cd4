#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "ksjko/jko.hpp"
#include "ksjko/random_states.hpp"

using namespace ksjko;

namespace {

QuantileDensity normal_quantiles(std::size_t n, double mean, double sd) {
    const boost::math::normal nd(mean, sd);
    return QuantileDensity::from_quantile_function(n, [&](double m) { return boost::math::quantile(nd, m); });
}

double l2_gap(const EulerianField& a, const EulerianField& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return gridops::l2_norm(a.grid, d);
}

}  // namespace

TEST(VSubproblem, ZeroData) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 200, 50);
    const auto v = solve_v_subproblem(EulerianField::zeros(p.grid()), normal_quantiles(50, 0.0, 1.0), 0.1, p);
    for (double value : v.values) EXPECT_EQ(value, 0.0);
}

TEST(VSubproblem, ImplicitEulerConsistency) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0, 400, 100);
    const Grid g = p.grid();
    const auto v_prev = EulerianField::sample(g, [](double x) { return std::exp(-0.5 * x * x) + 0.1 * std::cos(x); });
    const auto x = normal_quantiles(100, 0.3, 1.0);
    const double gap_small = l2_gap(solve_v_subproblem(v_prev, x, 1e-6, p), v_prev);
    const double gap_tiny = l2_gap(solve_v_subproblem(v_prev, x, 1e-7, p), v_prev);
    EXPECT_LT(gap_small, 10.0 * 1e-6);
    EXPECT_NEAR(gap_small / gap_tiny, 10.0, 0.1);
}

TEST(VSubproblem, SolvesTridiagonalSystem) {
    const auto p = ModelParams::quadratic(0.2, 1.0, 1.0, 300, 80);
    const Grid g = p.grid();
    const auto v_prev = EulerianField::sample(g, [](double x) { return 0.5 * std::exp(-x * x) - 0.1; });
    const auto x = normal_quantiles(80, -0.4, 0.8);
    const double tau = 0.05;
    const auto v = solve_v_subproblem(v_prev, x, tau, p);
    const auto dep = deposit_to_grid(x, g);
    const auto lap = gridops::neumann_laplacian(g, v.values);
    double rhs_norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rhs_norm = std::max(rhs_norm, std::abs(v_prev[i] / tau + p.chi * dep[i]));
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const double residual = (1.0 / tau + p.kappa) * v[i] - lap[i] - v_prev[i] / tau - p.chi * dep[i];
        EXPECT_LE(std::abs(residual), 1e-12 * rhs_norm) << i;
    }
}

TEST(VSubproblem, RejectsNonpositiveTau) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 50, 10);
    try {
        solve_v_subproblem(EulerianField::zeros(p.grid()), normal_quantiles(10, 0.0, 1.0), 0.0, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(XSubproblem, MinimizerIsFixedPoint) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0, 400, 100);
    const Grid g = p.grid();
    const auto v = EulerianField::sample(g, [](double x) { return 0.2 * std::exp(-x * x); });
    const auto x_prev = normal_quantiles(100, 0.5, 1.3);
    InnerSolverConfig cfg;
    const auto first = solve_x_subproblem(x_prev, v, 0.05, p, cfg);

    QuantileObjective obj;
    obj.anchor = x_prev.positions();
    obj.prox_weight = 1.0 / 0.05;
    obj.potential = &p.potential;
    obj.field = &v;
    obj.coupling = p.chi;
    const auto again = minimize_quantile_objective(
        obj, std::vector<double>(first.positions().begin(), first.positions().end()), cfg.newton());
    EXPECT_LE(again.iterations, 1);
    EXPECT_LT(wasserstein2(QuantileDensity(again.x), first), 1e-9);
}

TEST(XSubproblem, OrnsteinUhlenbeckMeanContraction) {
    // Translation commutes with the entropy, so the mean of the prox step solves m' = m - tau m'.
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 400, 200);
    const auto x_prev = normal_quantiles(200, 1.0, 1.0);
    InnerSolverConfig cfg;
    for (double tau : {0.01, 0.1, 0.5}) {
        const auto x = solve_x_subproblem(x_prev, EulerianField::zeros(p.grid()), tau, p, cfg);
        EXPECT_NEAR(mean(x), mean(x_prev) / (1.0 + tau), 1e-6) << tau;
        for (std::size_t j = 1; j < x.size(); ++j) EXPECT_GT(x[j], x[j - 1]);
    }
}

TEST(JkoStep, EquilibriumIsFixedPoint) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0);
    const auto eq = solve_equilibrium(p);
    const auto [next, report] = jko_step(eq.state(), 0.01, p, InnerSolverConfig{});
    EXPECT_LE(report.step_dist, 1e-6);
    EXPECT_LE(compound_dist(next, eq.state()), 1e-6);
}

TEST(JkoStep, WeakCouplingEquilibriumIsNearlyFixed) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0);
    const auto eq = solve_equilibrium(p);
    const auto [next, report] = jko_step(eq.state(), 0.01, p, InnerSolverConfig{});
    EXPECT_LE(report.step_dist, 1e-5);
}

TEST(JkoStep, EnergyInequalityFromRandomStarts) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0, 400, 200);
    const auto eq = solve_equilibrium(p);
    RandomStateGenerator gen(99);
    for (int k = 0; k < 5; ++k) {
        const State s = gen.perturbed(eq, p);
        const double h_old = entropy(s, p).H;
        const auto [next, report] = jko_step(s, 0.02, p, InnerSolverConfig{});
        const double d = compound_dist(next, s);
        EXPECT_LE(entropy(next, p).H + d * d / 0.04, h_old + 1e-10) << k;
        EXPECT_GE(report.penalized_decrease, -1e-10);
        EXPECT_NEAR(report.step_dist, d, 1e-15);
    }
}

TEST(Evolve, ZeroHorizonKeepsInitialState) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0, 200, 50);
    const State s0{normal_quantiles(50, 1.0, 1.0), EulerianField::zeros(p.grid())};
    const auto traj = evolve(s0, 0.01, 0.0, p, InnerSolverConfig{});
    ASSERT_EQ(traj.size(), 1u);
    EXPECT_EQ(traj.times[0], 0.0);
    EXPECT_TRUE(traj.steps.empty());
    EXPECT_FALSE(traj.failure);
}

TEST(Evolve, PiecewiseConstantInterpolation) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 200, 50);
    const State s0{normal_quantiles(50, 1.0, 1.0), EulerianField::zeros(p.grid())};
    const double tau = 0.1;
    const auto traj = evolve(s0, tau, 0.3, p, InnerSolverConfig{});
    ASSERT_EQ(traj.size(), 4u);
    EXPECT_EQ(traj.index_at(1.5 * tau), 2u);
    EXPECT_EQ(traj.index_at(2.0 * tau), 2u);
    EXPECT_EQ(traj.index_at(0.0), 0u);
    EXPECT_EQ(traj.index_at(1e-9), 1u);
    EXPECT_EQ(&traj.at(1.5 * tau), &traj.states[2]);
    EXPECT_THROW(traj.index_at(0.5), Error);
}

TEST(Evolve, DecoupledMeanFollowsImplicitEuler) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 400, 200);
    const State s0{normal_quantiles(200, 1.0, 1.0), EulerianField::zeros(p.grid())};
    const double tau = 0.05;
    const auto traj = evolve(s0, tau, 1.0, p, InnerSolverConfig{});
    ASSERT_FALSE(traj.failure);
    const double m0 = mean(s0.u);
    for (std::size_t n = 0; n < traj.size(); ++n) {
        EXPECT_NEAR(mean(traj.states[n].u), m0 * std::pow(1.0 + tau, -static_cast<double>(n)), 1e-6) << n;
    }
}

TEST(Evolve, OrnsteinUhlenbeckVariance) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0);
    const State s0{normal_quantiles(p.n_quantiles, 0.0, 2.0), EulerianField::zeros(p.grid())};
    const auto traj = evolve(s0, 0.01, 1.0, p, InnerSolverConfig{});
    ASSERT_FALSE(traj.failure);
    for (std::size_t n = 0; n < traj.size(); n += 10) {
        const double exact = 1.0 + 3.0 * std::exp(-2.0 * traj.times[n]);
        EXPECT_NEAR(variance(traj.states[n].u), exact, 0.03 * exact) << traj.times[n];
    }
}

TEST(Evolve, EnergyAndDistanceBounds) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0);
    const auto eq = solve_equilibrium(p);
    const State s0{normal_quantiles(p.n_quantiles, 1.0, 1.0),
                   EulerianField::sample(p.grid(), [](double x) { return 0.5 * std::exp(-x * x); })};
    const double tau = 0.02;
    const auto traj = evolve(s0, tau, 0.6, p, InnerSolverConfig{}, &eq);
    ASSERT_FALSE(traj.failure);
    ASSERT_EQ(traj.lyapunov.size(), traj.size());
    double total = 0.0;
    for (std::size_t n = 1; n < traj.size(); ++n) {
        const double d = traj.steps[n - 1].step_dist;
        EXPECT_LE(traj.energies[n].H + d * d / (2.0 * tau), traj.energies[n - 1].H + 1e-10) << n;
        total += d * d / (2.0 * tau);
    }
    // Summing the step inequalities telescopes, and H is bounded below by its minimum.
    EXPECT_LE(total, traj.energies.front().H - entropy(eq.state(), p).H + 1e-8);
}

TEST(Evolve, SecondMomentStaysBounded) {
    const auto p = ModelParams::quadratic(0.1, 1.0, 1.0);
    const State s0{normal_quantiles(p.n_quantiles, 0.0, 2.0), EulerianField::zeros(p.grid())};
    const auto traj = evolve(s0, 0.02, 1.0, p, InnerSolverConfig{});
    ASSERT_FALSE(traj.failure);
    for (const auto& s : traj.states) EXPECT_LE(second_moment(s.u), second_moment(s0.u) + 1e-9);
}

TEST(Evolve, RejectsBadArguments) {
    const auto p = ModelParams::quadratic(0.0, 1.0, 1.0, 50, 10);
    const State s0{normal_quantiles(10, 0.0, 1.0), EulerianField::zeros(p.grid())};
    EXPECT_THROW(evolve(s0, -0.1, 1.0, p, InnerSolverConfig{}), Error);
    EXPECT_THROW(evolve(s0, 0.1, -1.0, p, InnerSolverConfig{}), Error);
    InnerSolverConfig bad;
    bad.backtrack = 1.5;
    EXPECT_THROW(bad.validate(), Error);
}
