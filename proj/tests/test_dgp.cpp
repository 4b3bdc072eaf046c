#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include <prtebounds/dgp.hpp>

using namespace prte;

namespace {
double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
}  // namespace

TEST(Bernstein, PartitionOfUnityAndIntegral) {
    for (int deg : {2, 5}) {
        for (double v : {0.0, 0.17, 0.5, 1.0}) {
            double s = 0.0;
            for (int k = 0; k <= deg; ++k) s += bernstein_basis(k, deg, v);
            EXPECT_NEAR(s, 1.0, 1e-14);
        }
        for (int k = 0; k <= deg; ++k) {
            EXPECT_NEAR(integrate([&](double v) { return bernstein_basis(k, deg, v); }, 0, 1), 1.0 / (deg + 1), 1e-13);
        }
    }
}

// The integral of a Bernstein polynomial is the mean of its coefficients, so
// the ATE is mean(theta1) - mean(theta0) in both dimensions.
TEST(TrueValues, AteMatchesBernsteinMeans) {
    for (int k : {1, 2}) {
        for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
            const DgpSpec g = make_design(model, k, 0.5);
            const double analytic = mean_of(theta1_default(k)) - mean_of(theta0_default(k));
            EXPECT_NEAR(true_target(g, TargetSpec::ate()), analytic, 1e-9);
        }
    }
    EXPECT_NEAR(mean_of(theta1_default(1)) - mean_of(theta0_default(1)), 0.083, 1e-3);
    EXPECT_NEAR(mean_of(theta1_default(2)) - mean_of(theta0_default(2)), 0.139, 1e-3);
}

TEST(TrueValues, PrteByMonteCarlo) {
    // E[Y*] - E[Y]: draw Z from the policy law and compare with the observed law
    const DgpSpec g = local_departure_design(1, 0.5);
    DgpSpec policy = g;
    policy.instruments.probabilities = *g.instruments.policy_probabilities;
    const std::size_t n = 400000;
    const Dataset a = sample(policy, n, 5), b = sample(g, n, 6);
    const double mc = std::accumulate(a.y.begin(), a.y.end(), 0.0) / n - std::accumulate(b.y.begin(), b.y.end(), 0.0) / n;
    // two independent means, each with sd about 0.0008
    EXPECT_NEAR(true_target(g, TargetSpec::prte()), mc, 0.005);
}

TEST(Moments, PopulationMomentsAreCoherent) {
    for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
        for (int k : {1, 2}) {
            const DgpSpec g = make_design(model, k, 0.1);
            const MomentSet m = population_moments(g);
            ASSERT_EQ(m.size(), g.instruments.size());
            EXPECT_NEAR(std::accumulate(m.mass.begin(), m.mass.end(), 0.0), 1.0, 1e-14);
            for (std::size_t z = 0; z < m.size(); ++z) {
                EXPECT_GT(m.propensity(z), 0.0);
                EXPECT_LT(m.propensity(z), 1.0);
                EXPECT_LE(m.yd[z], m.d[z] + 1e-15);
                EXPECT_LE(m.y0[z], m.mass[z] - m.d[z] + 1e-15);
            }
        }
    }
}

TEST(Moments, LocalDeparturePropensityMatchesIndex) {
    // with v_dim 1 the local departure propensity is p(z) up to the noise
    const DgpSpec g = local_departure_design(1, 0.1);
    const MomentSet m = population_moments(g);
    for (std::size_t z = 0; z < m.size(); ++z) {
        EXPECT_NEAR(m.propensity(z), local_departure_index(g.instruments.values[z][0]), 0.05);
    }
}

TEST(Sampling, DeterministicGivenSeed) {
    const DgpSpec g = random_coefficient_design(2, 0.5);
    const Dataset a = sample(g, 500, 99), b = sample(g, 500, 99), c = sample(g, 500, 100);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.d, b.d);
    EXPECT_EQ(a.z, b.z);
    EXPECT_TRUE(a.y != c.y || a.d != c.d || a.z != c.z);
}

TEST(Sampling, SampleMomentsConvergeToPopulation) {
    for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
        const DgpSpec g = make_design(model, 1, 0.5);
        const MomentSet pop = population_moments(g);
        const MomentSet smp = sample_moments(sample(g, 300000, 3), g.instruments.size());
        for (std::size_t z = 0; z < pop.size(); ++z) {
            EXPECT_NEAR(smp.mass[z], pop.mass[z], 4e-3);
            EXPECT_NEAR(smp.yd[z], pop.yd[z], 4e-3);
            EXPECT_NEAR(smp.y0[z], pop.y0[z], 4e-3);
            EXPECT_NEAR(smp.d[z], pop.d[z], 4e-3);
        }
    }
}

TEST(Sampling, CsvRoundTrip) {
    const DgpSpec g = random_coefficient_design(1, 0.1);
    const Dataset a = sample(g, 50, 1);
    std::stringstream ss;
    write_csv(ss, a, g.instruments);
    const Dataset b = read_csv(ss, g.instruments);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.d, b.d);
    EXPECT_EQ(a.z, b.z);
}

TEST(Design, ViolationsAreReported) {
    DgpSpec g = local_departure_design(1, 0.1);
    EXPECT_TRUE(dgp_violations(g).empty());
    g.theta0.push_back(0.2);
    g.sigma = 0.0;
    g.instruments.values[0] = {};
    const auto v = dgp_violations(g);
    EXPECT_EQ(v.size(), 3u);
    EXPECT_THROW(local_departure_design(3, 0.1), ValidationError);
    EXPECT_THROW(sample(local_departure_design(1, 0.1), 0, 1), ValidationError);
}

TEST(CellAverages, IntegrateBackToMoments) {
    // sum over cells of F(z) vol * average(m1 mD) is E[YD 1[Z=z]]
    const DgpSpec g = local_departure_design(2, 0.5);
    const VPartition part(2, {0.0, 0.3, 1.0});
    const MtrCoefficients c = cell_averages(g, part);
    const MomentSet m = population_moments(g);
    for (std::size_t z = 0; z < m.size(); ++z) {
        double yd = 0, y0 = 0, d = 0;
        for (std::size_t k = 0; k < part.cell_count(); ++k) {
            const double w = m.mass[z] * part.cell_volume(k);
            yd += w * c.at(Block::M1D, k, z);
            y0 += w * c.at(Block::M0D, k, z);
            d += w * c.at(Block::MD, k, z);
        }
        EXPECT_NEAR(yd, m.yd[z], 1e-8);
        EXPECT_NEAR(y0, m.y0[z], 1e-8);
        EXPECT_NEAR(d, m.d[z], 1e-8);
    }
}
