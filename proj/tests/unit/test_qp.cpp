#include "mvport/errors.hpp"
#include "mvport/qp.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace mvport;

namespace
{

QpProblem problem_of(Eigen::MatrixXd q, Eigen::VectorXd r, double r0, double ridge = 0.0)
{
    QpProblem p;
    p.q = std::move(q);
    p.r = std::move(r);
    p.r0 = r0;
    p.ridge = ridge;
    return p;
}

double worst_violation(const QpProblem& p, const Eigen::VectorXd& w)
{
    double v = std::abs(w.sum() - 1.0);
    v = std::max(v, -w.minCoeff());
    v = std::max(v, p.r0 - p.r.dot(w));
    return v;
}

QpProblem random_problem(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    Eigen::VectorXd r(d);
    for (int j = 0; j < d; ++j)
        r(j) = u(rng);
    const double r0 = r.minCoeff() + frac(rng) * (r.maxCoeff() - r.minCoeff());
    return problem_of(oracle::random_psd(d, rng), r, r0);
}

} // namespace

TEST(Feasibility, VertexBoundary)
{
    EXPECT_TRUE(is_feasible(Eigen::Vector2d(0.01, 0.02), 0.02));
    EXPECT_FALSE(is_feasible(Eigen::Vector2d(0.01, 0.02), 0.021));
}

TEST(Feasibility, AgreesWithGridOracle)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int decided = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        Eigen::VectorXd r(6);
        for (int j = 0; j < 6; ++j)
            r(j) = u(rng);
        const double r0 = u(rng);
        const double grid_best = oracle::simplex_grid_max_return(r, 100);
        if (std::abs(grid_best - r0) <= 0.01)
            continue;
        ++decided;
        EXPECT_EQ(is_feasible(r, r0), grid_best >= r0) << "trial " << trial;
    }
    EXPECT_GT(decided, 900);
}

TEST(Solve, SymmetricPair)
{
    const auto p = problem_of(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.01, 0.01), 0.005);
    const auto s = solve(p);
    ASSERT_EQ(s.status, QpStatus::optimal);
    EXPECT_NEAR(s.weights(0), 0.5, 1e-9);
    EXPECT_NEAR(s.weights(1), 0.5, 1e-9);
    EXPECT_NEAR(s.objective, 0.25, 1e-12);
}

TEST(Solve, InverseVariancePair)
{
    Eigen::Matrix2d q = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    const auto s = solve(problem_of(q, Eigen::Vector2d(0.003, 0.003), 0.003));
    ASSERT_EQ(s.status, QpStatus::optimal);
    EXPECT_NEAR(s.weights(0), 0.8, 1e-9);
    EXPECT_NEAR(s.weights(1), 0.2, 1e-9);
}

TEST(Solve, ThreeAssetsMatchGrid)
{
    const auto p = problem_of(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.01, 0.02), 0.015);
    const auto s = solve(p);
    ASSERT_EQ(s.status, QpStatus::optimal);
    const auto grid = oracle::simplex_grid_minimum(p.q, p.r, p.r0, 1000);
    ASSERT_TRUE(grid.feasible);
    for (int j = 0; j < 3; ++j)
        EXPECT_NEAR(s.weights(j), grid.weights(j), 2e-3);
    // closed form on the face where the floor binds: (1/12, 1/3, 7/12)
    EXPECT_NEAR(s.weights(0), 1.0 / 12.0, 1e-9);
    EXPECT_NEAR(s.weights(1), 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(s.weights(2), 7.0 / 12.0, 1e-9);
    EXPECT_LE(s.objective, grid.objective + 1e-12);
}

TEST(Solve, InfeasibleIffUnreachable)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (int trial = 0; trial < 300; ++trial)
    {
        auto p = random_problem(rng, 4);
        p.r0 = u(rng);
        const auto s = solve(p);
        EXPECT_EQ(s.status == QpStatus::infeasible, !is_feasible(p.r, p.r0));
        if (s.status == QpStatus::infeasible)
            EXPECT_EQ(s.weights.size(), 0);
    }
}

TEST(Solve, OracleEquivalence)
{
    std::mt19937_64 rng(500);
    for (int trial = 0; trial < 500; ++trial)
    {
        const int d = 2 + trial % 3;
        const int steps = d == 4 ? 100 : 1000;
        const auto p = random_problem(rng, d);
        const auto s = solve(p);
        ASSERT_EQ(s.status, QpStatus::optimal);
        EXPECT_LE(worst_violation(p, s.weights), 1e-10) << "trial " << trial;
        const auto grid = oracle::simplex_grid_minimum(p.q, p.r, p.r0, steps);
        if (grid.feasible)
        {
            const double slack = 2.0 * p.q.cwiseAbs().maxCoeff() * d / steps;
            EXPECT_LE(s.objective, grid.objective + slack) << "trial " << trial;
        }
    }
}

TEST(Solve, RaisingTargetNeverLowersRisk)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial)
    {
        auto p = random_problem(rng, 5);
        const double lo = p.r.minCoeff();
        const double hi = p.r.maxCoeff();
        double previous = -1.0;
        for (int step = 0; step < 10; ++step)
        {
            p.r0 = std::min(hi, lo + (hi - lo) * step / 9.0);
            const auto s = solve(p);
            ASSERT_EQ(s.status, QpStatus::optimal);
            EXPECT_GE(s.objective, previous - 1e-15);
            previous = s.objective;
        }
    }
}

TEST(Solve, ScalingCovarianceKeepsWeights)
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial)
    {
        const auto p = random_problem(rng, 4);
        auto scaled = p;
        const double factor = 37.5;
        scaled.q *= factor;
        const auto a = solve(p);
        const auto b = solve(scaled);
        for (int j = 0; j < 4; ++j)
            EXPECT_NEAR(a.weights(j), b.weights(j), 1e-8);
        EXPECT_NEAR(b.objective, factor * a.objective, 1e-8 * factor * a.objective);
    }
}

TEST(Solve, GlobalMinimumVarianceIsInverseVariance)
{
    Eigen::VectorXd var(4);
    var << 0.5, 1.0, 2.0, 8.0;
    Eigen::MatrixXd q = var.asDiagonal();
    Eigen::VectorXd r(4);
    r << 0.01, -0.02, 0.03, 0.0;
    const auto s = solve(problem_of(q, r, r.minCoeff()));
    ASSERT_EQ(s.status, QpStatus::optimal);
    const Eigen::VectorXd inv = var.cwiseInverse();
    const Eigen::VectorXd expected = inv / inv.sum();
    for (int j = 0; j < 4; ++j)
        EXPECT_NEAR(s.weights(j), expected(j), 1e-9);
}

TEST(Solve, SingularCovarianceWithDefaultRidge)
{
    // rank one: every asset is the same risk factor
    Eigen::VectorXd v(5);
    v << 1, 2, 3, 4, 5;
    Eigen::MatrixXd q = v * v.transpose() * 1e-4;
    Eigen::VectorXd r(5);
    r << 0.001, 0.002, 0.003, 0.004, 0.005;
    auto p = problem_of(q, r, 0.0025, default_ridge(q));
    const auto s = solve(p);
    ASSERT_EQ(s.status, QpStatus::optimal);
    EXPECT_LE(worst_violation(p, s.weights), 1e-10);
    EXPECT_FALSE(verify_kkt(p, s).flagged);
}

TEST(Solve, ZeroCovarianceStillSolves)
{
    auto p = problem_of(Eigen::Matrix3d::Zero(), Eigen::Vector3d(0.01, 0.02, 0.03), 0.02);
    const auto s = solve(p);
    ASSERT_EQ(s.status, QpStatus::optimal);
    EXPECT_LE(worst_violation(p, s.weights), 1e-10);
    EXPECT_NEAR(s.objective, 0.0, 1e-20);
}

TEST(Solve, WeightsAreExactlyOnTheSimplex)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto s = solve(random_problem(rng, 8));
        EXPECT_GE(s.weights.minCoeff(), 0.0);
        EXPECT_LE(s.weights.maxCoeff(), 1.0);
        EXPECT_NEAR(s.weights.sum(), 1.0, 1e-15);
    }
}

TEST(Solve, RejectsMalformedProblems)
{
    Eigen::Matrix2d q;
    q << 1, 0.5, 0.4, 1;
    EXPECT_THROW(solve(problem_of(q, Eigen::Vector2d(0, 0), 0)), DataError);
    EXPECT_THROW(solve(problem_of(Eigen::Matrix3d::Identity(), Eigen::Vector2d(0, 0), 0)), DataError);
    EXPECT_THROW(solve(problem_of(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0, 0), 0, -1.0)), DataError);
    EXPECT_THROW(solve(problem_of(Eigen::Matrix2d::Identity(), Eigen::Vector2d(NAN, 0), 0)), DataError);
}

TEST(Regularize, ZeroMatrixFallback)
{
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    EXPECT_EQ(default_ridge(z), 1e-12);
    EXPECT_TRUE(regularize(z, default_ridge(z)).isApprox(1e-12 * Eigen::MatrixXd::Identity(3, 3)));
}

TEST(Regularize, RelativeRuleOnIdentity)
{
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    EXPECT_DOUBLE_EQ(default_ridge(i2), 1e-8);
    const auto out = regularize(i2, default_ridge(i2));
    EXPECT_EQ(out(0, 0), 1.0 + 1e-8);
    EXPECT_EQ(out(0, 1), 0.0);
}

TEST(Regularize, RankOneSmallestEigenvalueIsRidge)
{
    Eigen::VectorXd v(5);
    v << 1, -2, 0.5, 3, 1;
    v.normalize();
    const Eigen::MatrixXd q = v * v.transpose();
    const double ridge = default_ridge(q);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(regularize(q, ridge));
    EXPECT_NEAR(eig.eigenvalues().minCoeff(), ridge, 1e-15);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR(eig.eigenvalues().maxCoeff(), 1.0 + ridge, 1e-14);
}

TEST(VerifyKkt, AnalyticOptimumHasNoGaps)
{
    const auto p = problem_of(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.01, 0.01), 0.005);
    const auto report = verify_kkt(p, solve(p));
    EXPECT_FALSE(report.flagged);
    EXPECT_LE(report.max_gap(), 1e-10);
}

TEST(VerifyKkt, PerturbedPointIsFlagged)
{
    const auto p = problem_of(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.01, 0.01), 0.005);
    auto s = solve(p);
    s.weights(0) += 0.01;
    s.weights(1) -= 0.01;
    const auto report = verify_kkt(p, s);
    EXPECT_TRUE(report.flagged);
    EXPECT_GT(report.stationarity, 1e-8);
}

TEST(VerifyKkt, RandomSolutionsPass)
{
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 200; ++trial)
    {
        auto p = random_problem(rng, 2 + trial % 15);
        p.ridge = default_ridge(p.q);
        const auto s = solve(p);
        const auto report = verify_kkt(p, s);
        EXPECT_FALSE(report.flagged) << "trial " << trial << " gap " << report.max_gap();
        EXPECT_EQ(report.multipliers.size(), p.dim() + 1);
    }
}

TEST(Solve, TargetAtBestReturnIsTheVertex)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial)
    {
        auto p = random_problem(rng, 2 + trial % 12);
        Eigen::Index best = 0;
        p.r0 = p.r.maxCoeff(&best);
        const auto s = solve(p);
        ASSERT_EQ(s.status, QpStatus::optimal);
        EXPECT_EQ(s.weights(best), 1.0) << "trial " << trial;
        const auto report = verify_kkt(p, s);
        EXPECT_FALSE(report.flagged) << "trial " << trial << " gap " << report.max_gap();
        EXPECT_GE(report.multipliers.minCoeff(), 0.0);
    }
}

TEST(VerifyKkt, WrongVertexIsFlagged)
{
    // the GMV point is interior, so sitting on a vertex cannot be optimal
    const auto p = problem_of(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.01, 0.01, 0.01), 0.0);
    PortfolioSolution fake;
    fake.status = QpStatus::optimal;
    fake.weights = Eigen::Vector3d(1.0, 0.0, 0.0);
    EXPECT_TRUE(verify_kkt(p, fake).flagged);
}
