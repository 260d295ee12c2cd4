#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ksjko/equilibrium.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/params.hpp"
#include "ksjko/quantile.hpp"

namespace ksjko {

/// Seeded generator of smooth states near an equilibrium.
///
/// u is the push-forward of the equilibrium quantiles by a random monotone map
/// a + b x + c sin(w x + phi); v adds a random Gaussian bump and a cosine mode to
/// v_inf. Draws use the raw 64-bit engine output, so a seed gives the same states
/// on every platform.
class RandomStateGenerator {
public:
    explicit RandomStateGenerator(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * unit;
    }

    State perturbed(const EquilibriumPair& eq, const ModelParams& p) {
        const double shift = uniform(-0.6, 0.6);
        const double scale = uniform(0.7, 1.4);
        const double omega = uniform(0.4, 1.5);
        const double phase = uniform(0.0, 6.283185307179586);
        const double wiggle = uniform(-0.3, 0.3) * scale / omega;  // keeps the map's slope >= 0.7 scale
        const auto x_inf = eq.u_quantiles.positions();
        std::vector<double> x(x_inf.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = shift + scale * x_inf[j] + wiggle * std::sin(omega * x_inf[j] + phase);
        }

        const Grid g = p.grid();
        const double amplitude = uniform(-0.5, 0.5);
        const double center = uniform(-2.0, 2.0);
        const double width = uniform(0.5, 2.0);
        const double mode = uniform(-0.1, 0.1);
        const double pi = 3.141592653589793;
        std::vector<double> v(g.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double xi = g.node(i);
            const double z = (xi - center) / width;
            v[i] = eq.v_inf[i] + amplitude * std::exp(-0.5 * z * z) + mode * std::cos(pi * xi / g.half_width());
        }
        return State{QuantileDensity(std::move(x)), EulerianField(g, std::move(v))};
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ksjko
