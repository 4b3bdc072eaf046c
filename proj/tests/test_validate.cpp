#include <gtest/gtest.h>

#include <prtebounds/validate.hpp>

using namespace prte;

namespace {
bool mentions(const ValidationReport& r, const std::string& word) {
    for (const auto& v : r.violations) {
        if (v.find(word) != std::string::npos) return true;
    }
    return false;
}
}  // namespace

TEST(Validate, BuiltInDesignsAreClean) {
    for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
        const DgpSpec g = make_design(model, 2, 0.5);
        EXPECT_TRUE(validate_spec(g, {{0.0, 0.5, 1.0}, {0.0, 1.0}}, TargetSpec::prte()).ok());
    }
}

TEST(Validate, MassMustSumToOne) {
    DgpSpec g = local_departure_design(1, 0.5);
    g.instruments.probabilities[0] += 0.01;
    const auto r = validate_spec(g, {{0.0, 1.0}}, TargetSpec::ate());
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(mentions(r, "sums to"));
}

TEST(Validate, KnotsMustIncrease) {
    const DgpSpec g = local_departure_design(1, 0.5);
    auto r = validate_spec(g, {{0.0, 0.6, 0.4, 1.0}}, TargetSpec::ate());
    EXPECT_TRUE(mentions(r, "not increasing"));
    r = validate_spec(g, {{0.1, 1.0}}, TargetSpec::ate());
    EXPECT_TRUE(mentions(r, "start at 0"));
    r = validate_spec(g, std::vector<std::vector<double>>{}, TargetSpec::ate());
    EXPECT_TRUE(mentions(r, "dimension"));
}

TEST(Validate, LateEndpointsMustBeKnots) {
    const DgpSpec g = local_departure_design(1, 0.5);
    EXPECT_TRUE(validate_spec(g, {{0.0, 0.2, 0.6, 1.0}}, TargetSpec::late(0.2, 0.6)).ok());
    const auto r = validate_spec(g, {{0.0, 0.2, 1.0}}, TargetSpec::late(0.2, 0.6));
    EXPECT_TRUE(mentions(r, "LATE endpoint 0.6"));
    EXPECT_TRUE(mentions(validate_spec(g, {{0.0, 1.0}}, TargetSpec::late(0.7, 0.3)), "v_lo < v_hi"));
}

TEST(Validate, PrteNeedsPolicy) {
    DgpSpec g = local_departure_design(1, 0.5);
    g.instruments.policy_probabilities.reset();
    EXPECT_TRUE(mentions(validate_spec(g, {{0.0, 1.0}}, TargetSpec::prte()), "policy"));
}

TEST(Validate, CollectsEverything) {
    DgpSpec g = local_departure_design(1, 0.5);
    g.sigma = -1.0;
    g.instruments.probabilities[0] = -0.1;
    const auto r = validate_spec(g, {{0.0, 0.5, 0.5, 1.0}}, TargetSpec::late(0.2, 0.4));
    EXPECT_GE(r.violations.size(), 4u);
}
