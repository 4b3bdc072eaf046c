#pragma once

// Small random problems for the bilinear brute force: binary instrument,
// one-dimensional V, moments generated from a cellwise truth so that the
// bilinear program is feasible by construction.

#include <random>
#include <string>
#include <vector>

#include <prtebounds/bounds.hpp>

namespace prte::testing {

struct TinyInstance {
    InstrumentSpace instruments;
    MomentSet moments;
    ProblemOptions options;
    bool threshold = false;
    int resolution = 0;
    double truth = 0.0;  // ATE of the generating point
    std::string label;
};

inline TinyInstance tiny_instance(int index, std::uint64_t seed = 7) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    TinyInstance t;
    t.threshold = index % 3 == 0;
    const double f = 0.2 + 0.6 * U(rng);
    t.instruments.values = {{0.0}, {1.0}};
    t.instruments.probabilities = {f, 1 - f};
    const double knot = 0.2 + 0.6 * U(rng);
    const double p[2] = {0.2 + 0.3 * U(rng), 0.5 + 0.4 * U(rng)};
    t.options.target = TargetSpec::ate();
    if (t.threshold) t.options.restrictions.deterministic_monotone = true;
    else t.options.refinement = {knot};
    if (index % 4 == 1) t.options.restrictions.mtr = true;

    const VPartition part(1, t.threshold ? std::vector<double>{0.0, p[0], p[1], 1.0} : std::vector<double>{0.0, knot, 1.0});
    const std::size_t cells = part.cell_count();
    std::vector<double> m0(cells), m1(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        m0[k] = U(rng);
        m1[k] = U(rng);
        if (t.options.restrictions.mtr) m1[k] = std::max(m1[k], m0[k]);
        t.truth += part.cell_volume(k) * (m1[k] - m0[k]);
    }
    MomentSet& mo = t.moments;
    mo.mass = {f, 1 - f};
    mo.yd.assign(2, 0.0);
    mo.y0.assign(2, 0.0);
    mo.d.assign(2, 0.0);
    for (std::size_t z = 0; z < 2; ++z) {
        for (std::size_t k = 0; k < cells; ++k) {
            const double d = t.threshold ? (part.cell_interval(k, 0).second <= p[z] + 1e-12 ? 1.0 : 0.0) : U(rng);
            const double w = mo.mass[z] * part.cell_volume(k);
            mo.yd[z] += w * m1[k] * d;
            mo.y0[z] += w * m0[k] * (1 - d);
            mo.d[z] += w * d;
        }
    }
    t.resolution = t.threshold ? 11 : 41;
    t.label = "tiny" + std::to_string(index) + (t.threshold ? "-threshold" : "-cvr") +
              (t.options.restrictions.mtr ? "-mtr" : "");
    return t;
}

}  // namespace prte::testing
