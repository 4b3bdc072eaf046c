#include <gtest/gtest.h>

#include <prtebounds/bounds.hpp>

#include "support/tiny_instances.hpp"

using namespace prte;
using prte::testing::tiny_instance;

namespace {
MomentSet two_point(double f, double p0, double p1, double ey1_0, double ey1_1, double ey0_0, double ey0_1) {
    // conditional means of Y given D within each z, turned into moments
    MomentSet m;
    m.mass = {f, 1 - f};
    m.d = {f * p0, (1 - f) * p1};
    m.yd = {f * p0 * ey1_0, (1 - f) * p1 * ey1_1};
    m.y0 = {f * (1 - p0) * ey0_0, (1 - f) * (1 - p1) * ey0_1};
    return m;
}
}  // namespace

TEST(Manski, FullTakeUpIdentifiesTreatedMean) {
    // with p = 1 everywhere E[Y1] is identified and E[Y0] is only known to lie in [0, 1]
    const MomentSet m = two_point(0.5, 1.0, 1.0, 0.7, 0.7, 0.0, 0.0);
    const BoundsResult r = manski_bounds(m);
    ASSERT_TRUE(r.bounded());
    EXPECT_NEAR(r.lower, 0.7 - 1.0, 1e-14);
    EXPECT_NEAR(r.upper, 0.7, 1e-14);
}

TEST(Manski, HandComputedIntersection) {
    const MomentSet m = two_point(0.4, 0.3, 0.8, 0.6, 0.5, 0.2, 0.4);
    // E[Y1] in [max(.18, .40), min(.88, .60)], E[Y0] in [max(.14, .08), min(.44, .88)]
    const BoundsResult r = manski_bounds(m);
    ASSERT_TRUE(r.bounded());
    EXPECT_NEAR(r.lower, 0.40 - 0.44, 1e-12);
    EXPECT_NEAR(r.upper, 0.60 - 0.14, 1e-12);
    // threshold bounds use z=1 for Y1 and z=0 for Y0
    const BoundsResult h = hv_bounds(m);
    EXPECT_NEAR(h.lower, 0.40 - 0.44, 1e-12);
    EXPECT_NEAR(h.upper, 0.60 - 0.14, 1e-12);
}

TEST(Manski, ConflictingSupportIsEmpty) {
    // E[Y1] >= .9 from z=0 but <= .5 from z=1
    const MomentSet m = two_point(0.5, 0.9, 0.5, 1.0, 0.0, 0.5, 0.5);
    EXPECT_EQ(manski_bounds(m).status, BoundsStatus::Empty);
}

TEST(Manski, HvEqualsManskiWithConstantPropensity) {
    const MomentSet m = two_point(0.3, 0.45, 0.45, 0.6, 0.5, 0.2, 0.4);
    // intersecting over every z can only tighten the extreme-propensity bounds
    const BoundsResult a = manski_bounds(m), b = hv_bounds(m);
    EXPECT_GE(a.lower, b.lower - 1e-14);
    EXPECT_LE(a.upper, b.upper + 1e-14);
    const MomentSet same = two_point(0.3, 0.45, 0.45, 0.6, 0.6, 0.2, 0.2);
    EXPECT_NEAR(manski_bounds(same).lower, hv_bounds(same).lower, 1e-14);
    EXPECT_NEAR(manski_bounds(same).upper, hv_bounds(same).upper, 1e-14);
}

TEST(Population, LocalDepartureAteMatchesPublishedValues) {
    const DgpSpec g = local_departure_design(1, 0.1);
    const MomentSet m = population_moments(g);
    ProblemOptions o;
    o.target = TargetSpec::ate();
    for (const BoundsResult& r : {manski_bounds(m), hv_bounds(m), cvr_bounds(g.instruments, m, o)}) {
        ASSERT_TRUE(r.bounded());
        EXPECT_NEAR(r.lower, -0.188, 5e-3);
        EXPECT_NEAR(r.upper, 0.462, 5e-3);
    }
}

TEST(Population, RandomCoefficientThresholdModelIsEmptyWithCertificate) {
    const DgpSpec g = random_coefficient_design(1, 0.5);
    ProblemOptions o;
    o.target = TargetSpec::ate();
    const MomentSet m = population_moments(g);
    const BoundsResult r = mst_bounds(g.instruments, m, o);
    EXPECT_EQ(r.status, BoundsStatus::Empty);
    ASSERT_TRUE(r.certificate.has_value());
    o.restrictions.deterministic_monotone = true;
    Problem p = build_problem(g.instruments, m, o);
    EXPECT_GT(certificate_margin(assemble_system(p), *r.certificate), 0.0);
}

TEST(Population, RestrictionsNest) {
    const DgpSpec g = random_coefficient_design(1, 0.5);
    const MomentSet m = population_moments(g);
    ProblemOptions o;
    o.target = TargetSpec::ate();
    const BoundsResult none = cvr_bounds(g.instruments, m, o);
    o.restrictions = RestrictionSet::parse("r1");
    const BoundsResult r1 = cvr_bounds(g.instruments, m, o);
    o.restrictions = RestrictionSet::parse("r3");
    const BoundsResult r3 = cvr_bounds(g.instruments, m, o);
    ASSERT_TRUE(none.bounded() && r1.bounded() && r3.bounded());
    EXPECT_LE(none.lower, r1.lower + 1e-9);
    EXPECT_GE(none.upper, r1.upper - 1e-9);
    EXPECT_LE(r1.lower, r3.lower + 1e-9);
    EXPECT_GE(r1.upper, r3.upper - 1e-9);
    const double truth = true_target(g, o.target);
    EXPECT_LE(r3.lower, truth + 1e-9);
    EXPECT_GE(r3.upper, truth - 1e-9);
}

TEST(BoundsFromSystem, UnboundedObjective) {
    ConstraintSystem s(2);
    s.lower(1) = 0.0;  // eta1 = eta2 with eta2 only bounded below
    Eigen::RowVectorXd r(2);
    r << 1.0, -1.0;
    s.add_eq(r, 0.0, "link");
    const BoundsResult b = bounds_from_system(s);
    EXPECT_EQ(b.status, BoundsStatus::Unbounded);
    EXPECT_NEAR(b.lower, 0.0, 1e-12);
    EXPECT_EQ(b.upper, kInf);
}

// Each grid point of the brute force is an exactly feasible bilinear point, so
// its interval must lie inside the relaxation. In threshold mode m_D is fixed
// and the program is linear, so the two must coincide.
TEST(BruteForce, InsideRelaxationAndExactUnderThreshold) {
    int threshold = 0, relaxed = 0;
    for (int i = 0; i < 24; ++i) {
        const auto t = tiny_instance(i);
        SCOPED_TRACE(t.label);
        Problem p;
        const BoundsResult lp = cvr_bounds(t.instruments, t.moments, t.options, &p);
        const BoundsResult bf = brute_force_bilinear(p, t.resolution);
        const double h = 1.0 / (t.resolution - 1);
        ASSERT_TRUE(lp.bounded());
        ASSERT_TRUE(bf.bounded());
        EXPECT_GE(bf.lower, lp.lower - h);
        EXPECT_LE(bf.upper, lp.upper + h);
        // the points are exact, so the containment actually holds to rounding
        EXPECT_GE(bf.lower, lp.lower - 1e-9);
        EXPECT_LE(bf.upper, lp.upper + 1e-9);
        // the generating point is feasible, so the grid passes within a step of it
        EXPECT_GE(t.truth, bf.lower - h);
        EXPECT_LE(t.truth, bf.upper + h);
        if (t.threshold) {
            EXPECT_NEAR(bf.lower, lp.lower, 1e-9);
            EXPECT_NEAR(bf.upper, lp.upper, 1e-9);
            ++threshold;
        } else {
            ++relaxed;
        }
    }
    EXPECT_EQ(threshold, 8);
    EXPECT_EQ(relaxed, 16);
}

TEST(BruteForce, FinerGridDoesNotShrink) {
    // grids at 2^k + 1 points are nested, so the range can only grow
    for (int i : {2, 5, 7}) {
        const auto t = tiny_instance(i);
        Problem p;
        cvr_bounds(t.instruments, t.moments, t.options, &p);
        const BoundsResult a = brute_force_bilinear(p, 9), b = brute_force_bilinear(p, 17), c = brute_force_bilinear(p, 33);
        EXPECT_LE(b.lower, a.lower + 1e-12);
        EXPECT_GE(b.upper, a.upper - 1e-12);
        EXPECT_LE(c.lower, b.lower + 1e-12);
        EXPECT_GE(c.upper, b.upper - 1e-12);
    }
}

TEST(BruteForce, InconsistentMomentsAreEmptyForBoth) {
    auto t = tiny_instance(2);
    t.moments.d[0] = 1.2 * t.moments.mass[0];  // P(D=1 | Z=0) above one
    Problem p;
    const BoundsResult lp = cvr_bounds(t.instruments, t.moments, t.options, &p);
    EXPECT_EQ(lp.status, BoundsStatus::Empty);
    EXPECT_TRUE(lp.certificate.has_value());
    EXPECT_EQ(brute_force_bilinear(p, 13).status, BoundsStatus::Empty);
}

TEST(BruteForce, RejectsLargeProblemsAndBadResolution) {
    const DgpSpec g = local_departure_design(1, 0.5);
    ProblemOptions o;
    o.target = TargetSpec::ate();
    o.refinement = {0.2, 0.4};
    Problem p;
    cvr_bounds(g.instruments, population_moments(g), o, &p);
    ASSERT_GT(2 * p.layout.cells() + p.layout.cells() * p.layout.kz(), 12u);
    EXPECT_THROW(brute_force_bilinear(p, 11), ValidationError);
    const auto t = tiny_instance(2);
    Problem q;
    cvr_bounds(t.instruments, t.moments, t.options, &q);
    EXPECT_THROW(brute_force_bilinear(q, 1), ValidationError);
    EXPECT_THROW(brute_force_bilinear(q, 42), ValidationError);
}
