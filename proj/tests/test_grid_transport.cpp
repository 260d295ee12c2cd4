#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "ksjko/grid.hpp"
#include "ksjko/quantile.hpp"

using namespace ksjko;

namespace {

QuantileDensity normal_quantiles(std::size_t n, double mean, double sd) {
    const boost::math::normal nd(mean, sd);
    return QuantileDensity::from_quantile_function(n, [&](double m) { return boost::math::quantile(nd, m); });
}

EulerianField sampled_normal(const Grid& g, double mean, double sd) {
    const boost::math::normal nd(mean, sd);
    auto f = EulerianField::sample(g, [&](double x) { return boost::math::pdf(nd, x); });
    const double mass = gridops::integrate(g, f.values);
    for (double& v : f.values) v /= mass;
    return f;
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

}  // namespace

TEST(Grid, ThreeNodeGrid) {
    const auto g = Grid::uniform(1.0, 2);
    ASSERT_EQ(g.n_nodes(), 3u);
    EXPECT_DOUBLE_EQ(g.node(0), -1.0);
    EXPECT_DOUBLE_EQ(g.node(1), 0.0);
    EXPECT_DOUBLE_EQ(g.node(2), 1.0);
    EXPECT_DOUBLE_EQ(g.spacing(), 1.0);
}

TEST(Grid, SpacingAndNodeCount) {
    const auto g = Grid::uniform(10.0, 1000);
    EXPECT_EQ(g.n_nodes(), 1001u);
    EXPECT_NEAR(g.spacing(), 0.02, 1e-15);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) EXPECT_EQ(g.node(i), -g.node(g.n_nodes() - 1 - i));
}

TEST(Grid, RejectsBadArguments) {
    expect_kind(ErrorKind::InvalidArgument, [] { Grid::uniform(0.0, 4); });
    expect_kind(ErrorKind::InvalidArgument, [] { Grid::uniform(-1.0, 4); });
    expect_kind(ErrorKind::InvalidArgument, [] { Grid::uniform(1.0, 1); });
}

TEST(Grid, TrapezoidRuleIntegratesLinearExactly) {
    const auto g = Grid::uniform(2.0, 7);
    auto f = EulerianField::sample(g, [](double x) { return 3.0 + x; });
    EXPECT_NEAR(gridops::integrate(g, f.values), 12.0, 1e-13);
}

TEST(Grid, ShiftedNeumannSolveSatisfiesSystem) {
    const auto g = Grid::uniform(3.0, 50);
    std::vector<double> rhs(g.n_nodes());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = std::sin(g.node(i)) + 0.3;
    const auto f = gridops::solve_shifted_neumann(g, 2.5, rhs);
    const auto lap = gridops::neumann_laplacian(g, f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(2.5 * f[i] - lap[i], rhs[i], 1e-12);
}

TEST(DensityToQuantiles, UniformTwoPoints) {
    const auto g = Grid::uniform(1.0, 20);
    const auto u = EulerianField(g, std::vector<double>(g.n_nodes(), 0.5));
    const auto x = density_to_quantiles(u, 2);
    EXPECT_NEAR(x[0], -0.5, 1e-12);
    EXPECT_NEAR(x[1], 0.5, 1e-12);
}

TEST(DensityToQuantiles, StandardNormalMatchesInverseCdf) {
    const auto g = Grid::uniform(10.0, 800);
    const auto x = density_to_quantiles(sampled_normal(g, 0.0, 1.0), 100);
    const boost::math::normal nd;
    for (std::size_t j = 0; j < x.size(); ++j) {
        EXPECT_NEAR(x[j], boost::math::quantile(nd, QuantileDensity::mass_point(j, 100)), 1e-3) << j;
    }
}

TEST(DensityToQuantiles, RoundTripConvergesInL1) {
    auto error = [](std::size_t cells, std::size_t n) {
        const auto g = Grid::uniform(8.0, cells);
        const auto u = sampled_normal(g, 0.3, 1.2);
        const auto back = quantiles_to_density(density_to_quantiles(u, n), g);
        std::vector<double> d(u.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = back[i] - u[i];
        EXPECT_NEAR(gridops::integrate(g, back.values), 1.0, 1e-6);
        return gridops::l1_norm(g, d);
    };
    const double coarse = error(200, 100);
    const double fine = error(400, 200);
    const double finer = error(800, 400);
    EXPECT_LT(fine, coarse);
    EXPECT_LT(finer, fine);
    EXPECT_GT(coarse / fine, 1.5);
    EXPECT_GT(fine / finer, 1.5);
}

TEST(DensityToQuantiles, RejectsBadInput) {
    const auto g = Grid::uniform(1.0, 20);
    expect_kind(ErrorKind::NormalizationError,
                [&] { density_to_quantiles(EulerianField(g, std::vector<double>(g.n_nodes(), 0.6)), 10); });
    std::vector<double> neg(g.n_nodes(), 0.5);
    neg[3] = -1e-6;
    neg[4] += 1e-6;
    expect_kind(ErrorKind::InvalidDensity, [&] { density_to_quantiles(EulerianField(g, neg), 10); });
}

TEST(QuantilesToDensity, UniformTwoPoints) {
    const auto g = Grid::uniform(1.0, 20);
    const auto u = quantiles_to_density(QuantileDensity({-0.5, 0.5}), g);
    for (std::size_t i = 1; i + 1 < g.n_nodes(); ++i) EXPECT_NEAR(u[i], 0.5, 1e-12) << i;
    EXPECT_NEAR(gridops::integrate(g, u.values), 1.0, 1e-12);
}

TEST(QuantilesToDensity, StandardNormalNodeValues) {
    const auto g = Grid::uniform(10.0, 400);
    ASSERT_NEAR(g.spacing(), 0.05, 1e-15);
    const boost::math::normal nd;
    // Beyond the outermost half-cell the reconstruction is zero, so the sup error there is first order in 1/N.
    auto errors = [&](std::size_t n) {
        const auto x = normal_quantiles(n, 0.0, 1.0);
        const auto u = quantiles_to_density(x, g);
        double core = 0.0, all = 0.0;
        for (std::size_t i = 0; i < g.n_nodes(); ++i) {
            const double e = std::abs(u[i] - boost::math::pdf(nd, g.node(i)));
            all = std::max(all, e);
            if (std::abs(g.node(i)) < 2.5) core = std::max(core, e);
        }
        EXPECT_NEAR(gridops::integrate(g, u.values), 1.0, 1e-6);
        for (double v : u.values) EXPECT_GE(v, 0.0);
        return std::pair{core, all};
    };
    const auto [core400, all400] = errors(400);
    const auto [core800, all800] = errors(800);
    EXPECT_LT(core400, 1e-3);
    EXPECT_LT(core800, 0.6 * core400);
    EXPECT_LT(all400, 3e-3);
    EXPECT_LT(all800, 0.6 * all400);
}

TEST(QuantilesToDensity, OverflowIsReported) {
    const auto g = Grid::uniform(1.0, 20);
    expect_kind(ErrorKind::DomainOverflow, [&] { quantiles_to_density(QuantileDensity({-0.5, 1.5}), g); });
}

TEST(Wasserstein, IdentityAndTranslation) {
    const auto x = normal_quantiles(300, 0.2, 0.7);
    EXPECT_EQ(wasserstein2(x, x), 0.0);
    for (double a : {-2.0, 0.37, 5.0}) {
        std::vector<double> y(x.positions().begin(), x.positions().end());
        for (double& p : y) p += a;
        EXPECT_NEAR(wasserstein2(x, QuantileDensity(y)), std::abs(a), 1e-13);
    }
}

TEST(Wasserstein, GaussianClosedForm) {
    const auto a = normal_quantiles(1000, 0.0, 1.0);
    const auto b = normal_quantiles(1000, 1.0, 2.0);
    EXPECT_NEAR(wasserstein2(a, b), std::sqrt(2.0), 1e-3);
}

TEST(Wasserstein, ResolutionMismatch) {
    expect_kind(ErrorKind::ResolutionMismatch,
                [] { wasserstein2(QuantileDensity({0.0, 1.0}), QuantileDensity({0.0, 1.0, 2.0})); });
}

TEST(Wasserstein, MetricPropertiesOnRandomTriples) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_q = [&] {
        std::vector<double> x(64);
        double pos = -3.0 * unit(rng);
        for (double& p : x) p = (pos += 0.01 + 0.2 * unit(rng));
        return QuantileDensity(x);
    };
    for (int k = 0; k < 50; ++k) {
        const auto a = random_q(), b = random_q(), c = random_q();
        EXPECT_GE(wasserstein2(a, b), 0.0);
        EXPECT_DOUBLE_EQ(wasserstein2(a, b), wasserstein2(b, a));
        EXPECT_LE(wasserstein2(a, c), wasserstein2(a, b) + wasserstein2(b, c) + 1e-14);
    }
}

TEST(CompoundDist, Components) {
    const auto g = Grid::uniform(2.0, 40);
    const auto x = normal_quantiles(50, 0.0, 0.5);
    const State s{x, EulerianField::zeros(g)};
    EXPECT_EQ(compound_dist(s, s), 0.0);

    const double c = 3.0 / std::sqrt(4.0);  // trapezoid L2 norm of a constant c on [-2, 2] is 2c
    const State t{x, EulerianField(g, std::vector<double>(g.n_nodes(), c))};
    EXPECT_NEAR(compound_dist(s, t), 3.0, 1e-13);

    std::vector<double> shifted(x.positions().begin(), x.positions().end());
    for (double& p : shifted) p += 3.0;
    const double c4 = 4.0 / 2.0;
    const State w{QuantileDensity(shifted), EulerianField(g, std::vector<double>(g.n_nodes(), c4))};
    EXPECT_NEAR(compound_dist(s, w), 5.0, 1e-12);
    const double w2 = wasserstein2(s.u, w.u);
    EXPECT_NEAR(compound_dist(s, w) * compound_dist(s, w), w2 * w2 + 16.0, 1e-12);
}

TEST(SecondMoment, CollapsingSpread) {
    const std::size_t n = 11;
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = 1e-6 * (static_cast<double>(j) - 5.0);
    EXPECT_LT(second_moment(QuantileDensity(x)), 1e-10);
}

TEST(SecondMoment, UniformAndGaussian) {
    for (std::size_t n : {10u, 100u, 1000u}) {
        const auto x = QuantileDensity::from_quantile_function(n, [](double m) { return m; });
        const double dn = static_cast<double>(n);
        EXPECT_NEAR(second_moment(x), 1.0 / 3.0, 1.0 / (4.0 * dn * dn));
    }
    EXPECT_NEAR(second_moment(normal_quantiles(1000, 0.0, 1.0)), 1.0, 1e-2);
}

TEST(SampleField, ConstantAndLinear) {
    const auto g = Grid::uniform(2.0, 16);
    const auto x = normal_quantiles(40, 0.1, 0.4);
    const auto c = sample_field_at(EulerianField(g, std::vector<double>(g.n_nodes(), 1.7)), x);
    for (std::size_t j = 0; j < x.size(); ++j) {
        EXPECT_DOUBLE_EQ(c.values[j], 1.7);
        EXPECT_DOUBLE_EQ(c.slopes[j], 0.0);
    }
    const auto l = sample_field_at(EulerianField::sample(g, [](double y) { return y; }), x);
    for (std::size_t j = 0; j < x.size(); ++j) {
        EXPECT_NEAR(l.values[j], x[j], 1e-14);
        EXPECT_NEAR(l.slopes[j], 1.0, 1e-13);
    }
}

TEST(SampleField, QuadraticInterpolationError) {
    const auto g = Grid::uniform(1.0, 20);
    ASSERT_NEAR(g.spacing(), 0.1, 1e-15);
    const double h = g.spacing();
    const auto s = sample_field_at(EulerianField::sample(g, [](double y) { return y * y; }), QuantileDensity({0.3, 0.35}));
    EXPECT_NEAR(s.values[0], 0.09, h * h / 4.0);
    EXPECT_NEAR(s.values[1], 0.35 * 0.35, h * h / 4.0);
}

TEST(SampleField, OverflowIsReported) {
    const auto g = Grid::uniform(1.0, 20);
    expect_kind(ErrorKind::DomainOverflow,
                [&] { sample_field_at(EulerianField::zeros(g), QuantileDensity({0.0, 2.0})); });
}

TEST(Deposition, IsAdjointOfSampling) {
    const auto g = Grid::uniform(3.0, 30);
    const auto x = normal_quantiles(77, 0.4, 0.8);
    const auto d = deposit_to_grid(x, g);
    const auto f = EulerianField::sample(g, [](double y) { return std::cos(y) + y * y; });
    EXPECT_NEAR(gridops::inner(g, d.values, f.values), integrate_against(f, x), 1e-13);
    EXPECT_NEAR(gridops::integrate(g, d.values), 1.0, 1e-13);
}

TEST(QuantileDensity, RejectsNonMonotone) {
    expect_kind(ErrorKind::InvalidDensity, [] { QuantileDensity({0.0, 0.0, 1.0}); });
    expect_kind(ErrorKind::InvalidDensity, [] { QuantileDensity({0.0, 1.0, 0.5}); });
}
