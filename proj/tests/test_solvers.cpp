#include <random>

#include <gtest/gtest.h>

#include <prtebounds/assembler.hpp>
#include <prtebounds/optimizer.hpp>

#include "support/solver_checks.hpp"

using namespace prte;
using prte::testing::box_radius_sq;
using prte::testing::random_system;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

// c + A_eq' l_eq + A_in' l_in - nu_L + nu_U, which must vanish at an optimum.
Eigen::VectorXd stationarity(const ConstraintSystem& s, const Eigen::VectorXd& grad, const SolveOutcome& o) {
    Eigen::VectorXd r = grad - o.nu_lower + o.nu_upper;
    if (s.A_eq.rows() > 0) r += s.A_eq.transpose() * o.lambda_eq;
    if (s.A_in.rows() > 0) r += s.A_in.transpose() * o.lambda_in;
    return r;
}

void expect_kkt(const ConstraintSystem& s, const Eigen::VectorXd& grad, const SolveOutcome& o, double tol) {
    ASSERT_TRUE(o.optimal()) << o.message;
    EXPECT_LT(s.max_violation(o.solution), tol);
    EXPECT_LT(stationarity(s, grad, o).cwiseAbs().maxCoeff(), tol);
    if (o.lambda_in.size() > 0) {
        EXPECT_GE(o.lambda_in.minCoeff(), -tol);
        const Eigen::VectorXd slack = s.b_in - s.A_in * o.solution;
        EXPECT_LT(o.lambda_in.cwiseProduct(slack).cwiseAbs().maxCoeff(), tol);
    }
    EXPECT_GE(o.nu_lower.minCoeff(), -tol);
    EXPECT_GE(o.nu_upper.minCoeff(), -tol);
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (std::isfinite(s.lower(j))) {
            EXPECT_LT(std::abs(o.nu_lower(j) * (o.solution(j) - s.lower(j))), tol);
        }
        if (std::isfinite(s.upper(j))) {
            EXPECT_LT(std::abs(o.nu_upper(j) * (s.upper(j) - o.solution(j))), tol);
        }
    }
}

}  // namespace

TEST(Lp, TextbookProblem) {
    // max x + y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0
    ConstraintSystem s(2);
    s.lower.setZero();
    s.add_in(row({1, 2}), 4);
    s.add_in(row({3, 1}), 6);
    const Eigen::Vector2d c(-1, -1);
    const SolveOutcome o = solve_lp_objective(s, c);
    ASSERT_TRUE(o.optimal());
    EXPECT_NEAR(o.value, -2.8, 1e-12);
    EXPECT_NEAR(o.solution(0), 1.6, 1e-12);
    EXPECT_NEAR(o.solution(1), 1.2, 1e-12);
    EXPECT_NEAR(o.lambda_in(0), 0.4, 1e-12);
    EXPECT_NEAR(o.lambda_in(1), 0.2, 1e-12);
    EXPECT_NEAR(lp_dual_value(s, o), o.value, 1e-12);
    expect_kkt(s, c, o, 1e-12);
}

TEST(Lp, StrongDualityAndComplementarityOnRandomProblems) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 40; ++t) {
        const int n = 4 + t % 9;
        const ConstraintSystem s = random_system(rng, n, t % 3, 2 + t % 11);
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c(j) = U(rng);
        const SolveOutcome o = solve_lp_objective(s, c);
        expect_kkt(s, c, o, 1e-9);
        EXPECT_NEAR(lp_dual_value(s, o), o.value, 1e-9);
    }
}

TEST(Lp, InfeasibleSystemHasCertificate) {
    ConstraintSystem s(2);
    s.lower.setZero();
    s.upper.setConstant(1.0);
    s.add_in(row({1, 1}), 0.5);
    s.add_in(row({-1, -1}), -1.5);
    const SolveOutcome o = solve_lp(s, Direction::Min);
    EXPECT_EQ(o.status, SolveStatus::Infeasible);
    ASSERT_TRUE(o.certificate.has_value());
    EXPECT_GT(certificate_margin(s, *o.certificate), 0.0);
}

TEST(Lp, InfeasibleEqualitiesHaveCertificate) {
    ConstraintSystem s(3);
    s.lower.setZero();
    s.upper.setConstant(1.0);
    s.add_eq(row({1, 1, 1}), 2.5);
    s.add_eq(row({1, 0, 0}), 0.0);
    s.add_eq(row({0, 1, 0}), 0.25);
    const SolveOutcome o = solve_lp(s, Direction::Max);
    EXPECT_EQ(o.status, SolveStatus::Infeasible);
    ASSERT_TRUE(o.certificate.has_value());
    EXPECT_GT(certificate_margin(s, *o.certificate), 0.0);
    // vectors that prove nothing have no positive margin
    EXPECT_LE(certificate_margin(s, Eigen::Vector3d(0, 1, 0)), 0.0);
    EXPECT_LT(certificate_margin(s, Eigen::Vector3d(-1, 0, 0)), 0.0);
}

TEST(Lp, UnboundedIsReported) {
    ConstraintSystem s(2);
    s.lower.setZero();
    s.add_in(row({1, -1}), 1);
    EXPECT_EQ(solve_lp(s, Direction::Max, 1).status, SolveStatus::Unbounded);
}

TEST(Lp, MaxDirectionNegatesValue) {
    ConstraintSystem s(1);
    s.lower(0) = -2;
    s.upper(0) = 3;
    EXPECT_DOUBLE_EQ(solve_lp(s, Direction::Max).value, 3);
    EXPECT_DOUBLE_EQ(solve_lp(s, Direction::Min).value, -2);
    const auto cut = std::make_optional(std::make_pair(row({1}), 1.0));
    EXPECT_DOUBLE_EQ(solve_lp_with_extra_row(s, cut, 0, Direction::Max).value, 1);
    EXPECT_THROW(solve_lp(s, Direction::Max, 4), ValidationError);
}

TEST(Lp, PopulationSystemsSatisfyKkt) {
    for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
        for (const auto& r : {RestrictionSet::none(), RestrictionSet::r3()}) {
            ProblemOptions o;
            o.restrictions = r;
            o.refinement = {0.25, 0.5};
            const ConstraintSystem s = assemble_population(make_design(model, 1, 0.5), o);
            for (Direction d : {Direction::Min, Direction::Max}) {
                const SolveOutcome out = solve_lp(s, d);
                const Eigen::VectorXd grad = unit_vector(s.cols(), 0, d == Direction::Min ? 1.0 : -1.0);
                expect_kkt(s, grad, out, 1e-8);
                EXPECT_NEAR(lp_dual_value(s, out), d == Direction::Min ? out.value : -out.value, 1e-8);
            }
        }
    }
}

TEST(Lp, ThresholdModelMisspecificationIsCertified) {
    ProblemOptions o;
    o.restrictions.deterministic_monotone = true;
    const ConstraintSystem s = assemble_population(random_coefficient_design(1, 0.1), o);
    const SolveOutcome out = solve_lp(s, Direction::Min);
    EXPECT_EQ(out.status, SolveStatus::Infeasible);
    ASSERT_TRUE(out.certificate.has_value());
    EXPECT_GT(certificate_margin(s, *out.certificate), 0.0);
}

TEST(Qp, OneDimensionalCases) {
    ConstraintSystem s(1);
    s.lower(0) = 0;
    s.upper(0) = 1;
    Eigen::VectorXd c(1), h(1);
    c << 1;
    h << 1;
    SolveOutcome o = solve_qp(s, c, h);
    ASSERT_TRUE(o.optimal());
    EXPECT_NEAR(o.solution(0), 0.0, 1e-14);
    EXPECT_NEAR(o.value, 0.0, 1e-14);
    s.upper(0) = 2;
    c << -1;
    o = solve_qp(s, c, h);
    ASSERT_TRUE(o.optimal());
    EXPECT_NEAR(o.solution(0), 1.0, 1e-12);
    EXPECT_NEAR(o.value, -0.5, 1e-12);
}

TEST(Qp, ProjectionOntoSimplex) {
    // min |x - y|^2 over the probability simplex, compared with the sort-based projection
    const Eigen::Vector4d y(0.9, -0.3, 0.4, 0.6);
    ConstraintSystem s(4);
    s.lower.setZero();
    s.add_eq(row({1, 1, 1, 1}), 1);
    const SolveOutcome o = solve_qp(s, -2 * y, Eigen::Vector4d::Constant(2.0));
    ASSERT_TRUE(o.optimal());
    std::vector<double> u(y.data(), y.data() + 4);
    std::sort(u.rbegin(), u.rend());
    double cum = 0, theta = 0;
    for (int k = 0; k < 4; ++k) {
        cum += u[k];
        const double t = (cum - 1) / (k + 1);
        if (u[k] - t > 0) theta = t;
    }
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(o.solution(j), std::max(y(j) - theta, 0.0), 1e-12);
    expect_kkt(s, -2 * y + 2 * o.solution, o, 1e-10);
}

TEST(Qp, RandomProblemsSatisfyKkt) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        const int n = 3 + t % 8;
        const ConstraintSystem s = random_system(rng, n, t % 2, 3 + t % 7);
        Eigen::VectorXd c(n), h(n);
        for (int j = 0; j < n; ++j) {
            c(j) = 3 * U(rng);
            h(j) = 0.1 + std::abs(U(rng));
        }
        const SolveOutcome o = solve_qp(s, c, h);
        expect_kkt(s, c + h.cwiseProduct(o.solution), o, 1e-8);
    }
}

// Strict convexity: every start point leads to the same minimizer.
TEST(Regularized, UniqueOptimizerFromDifferentStarts) {
    ProblemOptions opts;
    opts.refinement = {0.5};
    const ConstraintSystem s = assemble_population(local_departure_design(1, 0.5), opts);
    const double mu = 1e-3;
    std::vector<Eigen::VectorXd> starts;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 4; ++t) {
        Eigen::VectorXd c(s.cols());
        for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = U(rng);
        const SolveOutcome v = solve_lp_objective(s, c);
        ASSERT_TRUE(v.optimal());
        starts.push_back(v.solution);
    }
    for (Direction d : {Direction::Min, Direction::Max}) {
        const SolveOutcome ref = solve_regularized(s, d, mu);
        ASSERT_TRUE(ref.optimal()) << ref.message;
        for (const auto& x0 : starts) {
            const SolveOutcome o = solve_regularized(s, d, mu, x0);
            ASSERT_TRUE(o.optimal()) << o.message;
            EXPECT_LT((o.solution - ref.solution).cwiseAbs().maxCoeff(), 1e-7);
            EXPECT_NEAR(o.value, ref.value, 1e-10);
        }
    }
    EXPECT_THROW(solve_regularized(s, Direction::Min, 0.0), ValidationError);
}

// 0 <= reg - lp <= mu * max |eta|^2 on the lower side, mirrored above.
TEST(Regularized, ConvergesToLpValueAsMuShrinks) {
    for (auto model : {TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient}) {
        ProblemOptions opts;
        opts.restrictions = RestrictionSet::r1();
        const ConstraintSystem s = assemble_population(make_design(model, 1, 0.1), opts);
        const double lo = solve_lp(s, Direction::Min).value, hi = solve_lp(s, Direction::Max).value;
        const double diam = box_radius_sq(s);
        double prev_lo = kInf, prev_hi = -kInf;
        for (double mu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
            const SolveOutcome a = solve_regularized(s, Direction::Min, mu);
            const SolveOutcome b = solve_regularized(s, Direction::Max, mu);
            ASSERT_TRUE(a.optimal() && b.optimal());
            EXPECT_GE(a.value, lo - 1e-10);
            EXPECT_LE(a.value - lo, mu * diam + 1e-10);
            EXPECT_LE(b.value, hi + 1e-10);
            EXPECT_LE(hi - b.value, mu * diam + 1e-10);
            EXPECT_LE(a.value, prev_lo + 1e-12);
            EXPECT_GE(b.value, prev_hi - 1e-12);
            prev_lo = a.value;
            prev_hi = b.value;
        }
        EXPECT_NEAR(prev_lo, lo, 1e-4);
        EXPECT_NEAR(prev_hi, hi, 1e-4);
    }
}

// Tiny Hessians magnify rounding in the projected gradient; the solver must
// still recognise a stationary working set.
TEST(Regularized, VerySmallMuStillConverges) {
    ProblemOptions opts;
    opts.restrictions = RestrictionSet::r3();
    const ConstraintSystem s = assemble_population(random_coefficient_design(2, 0.5), opts);
    const double lo = solve_lp(s, Direction::Min).value;
    for (double mu : {1e-6, 1e-7, 1e-8}) {
        const SolveOutcome a = solve_regularized(s, Direction::Min, mu);
        ASSERT_TRUE(a.optimal()) << a.message << " at mu " << mu;
        EXPECT_NEAR(a.value, lo, mu * box_radius_sq(s) + 1e-9);
    }
}
