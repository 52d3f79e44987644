#include "mvport/errors.hpp"
#include "mvport/strategy.hpp"
#include "mvport/synthetic.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mvport;

namespace
{

StrategyParams params_of(int p, int q, double k)
{
    StrategyParams s;
    s.observation_p = p;
    s.holding_q = q;
    s.multiple_k = k;
    s.window = WindowSpec::rectangular(p);
    return s;
}

PriceTable table_of(const Eigen::MatrixXd& prices, std::vector<std::string> assets)
{
    const std::string index = assets.back();
    return PriceTable(business_days("2015-01-05", static_cast<std::size_t>(prices.rows())), std::move(assets), prices,
                      index);
}

PriceTable seed42_fixture()
{
    return generate(make_market_spec(6, 500, 42)).prices;
}

bool same_record(const TradeRecord& a, const TradeRecord& b)
{
    if (a.decision != b.decision || a.entry_day != b.entry_day || a.exit_day != b.exit_day)
        return false;
    if (a.decision != Decision::traded)
        return true;
    return a.weights.size() == b.weights.size() && (a.weights.array() == b.weights.array()).all() &&
           a.round_trip_return == b.round_trip_return && a.daily_avg_return == b.daily_avg_return &&
           a.reference_daily_avg == b.reference_daily_avg;
}

} // namespace

TEST(EvaluateDay, FallingIndexSkipsWithoutOptimizing)
{
    Eigen::MatrixXd m(8, 2);
    for (Eigen::Index t = 0; t < 8; ++t)
    {
        m(t, 0) = 100.0 + t;
        m(t, 1) = 100.0;
    }
    m(4, 1) = 100.0 / 1.01; // index log return of day 4 is negative
    const auto prices = table_of(m, {"A", "IDX"});
    const auto returns = compute_returns(prices);
    const auto rec = evaluate_day(4, prices, returns, params_of(3, 2, 2.0));
    EXPECT_EQ(rec.decision, Decision::skipped_index_down);
    EXPECT_LT(rec.index_return, 0.0);
    EXPECT_EQ(rec.weights.size(), 0);
    EXPECT_EQ(rec.target, 0.0);
}

TEST(EvaluateDay, FlatIndexCountsAsDown)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(8, 2, 100.0);
    for (Eigen::Index t = 0; t < 8; ++t)
        m(t, 0) = 100.0 + t;
    const auto prices = table_of(m, {"A", "IDX"});
    const auto rec = evaluate_day(4, prices, compute_returns(prices), params_of(3, 2, 2.0));
    EXPECT_EQ(rec.decision, Decision::skipped_index_down);
}

TEST(EvaluateDay, UnreachableTargetSkips)
{
    // index up 0.1% on the day, k = 10 asks for 1% a day; assets average far less
    Eigen::MatrixXd m(10, 3);
    for (Eigen::Index t = 0; t < 10; ++t)
    {
        m(t, 0) = 100.0 * std::pow(1.002, static_cast<double>(t));
        m(t, 1) = 100.0 * std::pow(0.999, static_cast<double>(t));
        m(t, 2) = 100.0;
    }
    m(6, 2) = 100.1;
    const auto prices = table_of(m, {"A", "B", "IDX"});
    const auto rec = evaluate_day(6, prices, compute_returns(prices), params_of(4, 2, 10.0));
    EXPECT_EQ(rec.decision, Decision::skipped_infeasible);
    EXPECT_NEAR(rec.target, 10.0 * rec.index_return, 1e-18);
    EXPECT_EQ(rec.weights.size(), 0);
}

TEST(EvaluateDay, SingleAssetRoundTrip)
{
    Eigen::MatrixXd m(12, 2);
    for (Eigen::Index t = 0; t < 12; ++t)
    {
        m(t, 0) = 100.0;
        m(t, 1) = 100.0 + t; // index rises every day
    }
    for (Eigen::Index t = 0; t <= 5; ++t)
        m(t, 0) = 95.0 + t; // window means are positive and large
    m(10, 0) = 105.0;
    const auto prices = table_of(m, {"A", "IDX"});
    auto params = params_of(5, 5, 0.5);
    params.investable = {"A"};
    const auto rec = evaluate_day(5, prices, compute_returns(prices), params);
    ASSERT_EQ(rec.decision, Decision::traded);
    ASSERT_EQ(rec.weights.size(), 1);
    EXPECT_EQ(rec.weights(0), 1.0);
    EXPECT_EQ(rec.entry_prices(0), 100.0);
    EXPECT_EQ(rec.exit_prices(0), 105.0);
    EXPECT_NEAR(rec.round_trip_return, 0.05, 1e-15);
    EXPECT_NEAR(rec.daily_avg_return, 0.01, 1e-16);
    EXPECT_EQ(rec.exit_day, 10);
}

TEST(EvaluateDay, OutsideRangeIsAnError)
{
    const auto prices = seed42_fixture();
    const auto returns = compute_returns(prices);
    EXPECT_THROW(evaluate_day(49, prices, returns, params_of(50, 21, 2.0)), DataError);
    EXPECT_THROW(evaluate_day(479, prices, returns, params_of(50, 21, 2.0)), DataError);
    EXPECT_NO_THROW(evaluate_day(478, prices, returns, params_of(50, 21, 2.0)));
}

TEST(ReferenceReturn, FlatAndRisingIndex)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(12, 2, 100.0);
    const auto flat = table_of(m, {"A", "IDX"});
    EXPECT_EQ(reference_return(0, 10, flat), 0.0);
    m(10, 1) = 110.0;
    const auto up = table_of(m, {"A", "IDX"});
    EXPECT_NEAR(reference_return(0, 10, up), 0.01, 1e-17);
    EXPECT_THROW(reference_return(5, 10, up), DataError);
}

TEST(ReferenceReturn, SampledDays)
{
    const auto prices = seed42_fixture();
    const auto idx = prices.index_position();
    for (auto [day, q] : {std::pair{60, 21}, std::pair{200, 42}, std::pair{400, 84}})
    {
        const double entry = prices.price(day, idx);
        const double exit = prices.price(day + q, idx);
        EXPECT_NEAR(reference_return(day, q, prices), (exit / entry - 1.0) / q, 1e-16);
    }
}

TEST(RunSimulation, FallingIndexNeverTrades)
{
    Eigen::MatrixXd m(80, 3);
    for (Eigen::Index t = 0; t < 80; ++t)
    {
        m(t, 0) = 50.0 + 0.3 * t;
        m(t, 1) = 70.0 + std::sin(static_cast<double>(t));
        m(t, 2) = 1000.0 * std::pow(0.995, static_cast<double>(t));
    }
    const auto prices = table_of(m, {"A", "B", "IDX"});
    const auto result = run_simulation(prices, compute_returns(prices), params_of(10, 5, 2.0));
    EXPECT_EQ(result.trade_count, 0u);
    EXPECT_FALSE(result.real_avg.has_value());
    EXPECT_FALSE(result.reference_avg.has_value());
    EXPECT_EQ(result.skipped_index_down, result.evaluated_days());
    EXPECT_EQ(result.evaluated_days(), 80u - 1u - 5u - 10u + 1u);
}

TEST(RunSimulation, UniformGainsEveryDay)
{
    const int q = 7;
    Eigen::MatrixXd m(120, 4);
    for (Eigen::Index t = 0; t < 120; ++t)
    {
        const double level = std::pow(1.01, static_cast<double>(t) / q);
        m(t, 0) = 20.0 * level;
        m(t, 1) = 35.0 * level;
        m(t, 2) = 80.0 * level;
        m(t, 3) = 1000.0 * level;
    }
    const auto prices = table_of(m, {"A", "B", "C", "IDX"});
    const auto result = run_simulation(prices, compute_returns(prices), params_of(20, q, 0.5));
    EXPECT_EQ(result.trade_count, result.evaluated_days());
    ASSERT_TRUE(result.real_avg.has_value());
    EXPECT_NEAR(*result.real_avg, 0.01 / q, 1e-14);
    EXPECT_NEAR(*result.reference_avg, 0.01 / q, 1e-14);
}

TEST(RunSimulation, MatchesStraightLineReference)
{
    const auto prices = seed42_fixture();
    const auto result = run_simulation(prices, compute_returns(prices), params_of(50, 21, 2.0));
    const auto ref = oracle::reference_simulation(oracle::to_rows(prices),
                                                  static_cast<std::size_t>(prices.index_position()), true, 50, 21, 2.0);
    EXPECT_EQ(result.trade_count, ref.trades);
    EXPECT_EQ(result.skipped_index_down, ref.skipped_down);
    EXPECT_EQ(result.skipped_infeasible, ref.skipped_infeasible);
    ASSERT_GT(ref.trades, 0u);
    ASSERT_TRUE(result.real_avg.has_value());
    EXPECT_NEAR(*result.real_avg, ref.real_avg, 1e-10);
    EXPECT_NEAR(*result.reference_avg, ref.reference_avg, 1e-10);
}

TEST(RunSimulation, StandardConventionMatchesReference)
{
    const auto prices = seed42_fixture();
    auto params = params_of(30, 10, 1.0);
    params.convention = ReturnConvention::standard;
    const auto result = run_simulation(prices, compute_returns(prices, ReturnConvention::standard), params);
    const auto ref = oracle::reference_simulation(oracle::to_rows(prices),
                                                  static_cast<std::size_t>(prices.index_position()), false, 30, 10, 1.0);
    EXPECT_EQ(result.trade_count, ref.trades);
    ASSERT_GT(ref.trades, 0u);
    EXPECT_NEAR(*result.real_avg, ref.real_avg, 1e-10);
}

TEST(RunSimulation, EmptyRangeIsAnError)
{
    const auto prices = seed42_fixture();
    EXPECT_THROW(run_simulation(prices, compute_returns(prices), params_of(400, 100, 2.0)), DataError);
}

TEST(RunSimulation, RejectsReturnsFromOtherPrices)
{
    const auto a = seed42_fixture();
    const auto b = generate(make_market_spec(6, 400, 42)).prices;
    EXPECT_THROW(run_simulation(a, compute_returns(b), params_of(50, 21, 2.0)), DataError);
}

TEST(StrategyRules, NoLookAhead)
{
    const auto prices = seed42_fixture();
    const auto returns = compute_returns(prices);
    const auto params = params_of(50, 21, 2.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.9, 1.1);
    int traded = 0;
    for (Eigen::Index day : {60, 97, 150, 233, 301, 388, 420, 478})
    {
        const auto clean = evaluate_day(day, prices, returns, params);
        Eigen::MatrixXd m = prices.prices();
        for (Eigen::Index t = day + 1; t < m.rows(); ++t)
            if (t != day + params.holding_q)
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                    m(t, c) *= u(rng);
        const PriceTable corrupted(prices.dates(), prices.assets(), m, prices.index_column());
        const auto dirty = evaluate_day(day, corrupted, compute_returns(corrupted), params);
        EXPECT_TRUE(same_record(clean, dirty)) << "day " << day;
        traded += clean.decision == Decision::traded;
    }
    // scan the fixture for more traded days so the check covers real trades
    const auto all = run_simulation(prices, returns, params);
    for (const auto& rec : all.trades)
    {
        if (rec.decision != Decision::traded || traded >= 8)
            continue;
        Eigen::MatrixXd m = prices.prices();
        for (Eigen::Index t = rec.entry_day + 1; t < m.rows(); ++t)
            if (t != rec.exit_day)
                m.row(t) *= u(rng);
        const PriceTable corrupted(prices.dates(), prices.assets(), m, prices.index_column());
        EXPECT_TRUE(same_record(rec, evaluate_day(rec.entry_day, corrupted, compute_returns(corrupted), params)))
            << "day " << rec.entry_day;
        ++traded;
    }
    EXPECT_GE(traded, 8);
}

TEST(StrategyRules, GateAndFeasibilityHoldEveryDay)
{
    const auto prices = seed42_fixture();
    const auto returns = compute_returns(prices);
    const auto params = params_of(50, 21, 2.0);
    const auto result = run_simulation(prices, returns, params);
    const auto rows = oracle::to_rows(prices);
    const auto idx = prices.index_position();
    for (const auto& rec : result.trades)
    {
        const Eigen::Index i = rec.entry_day;
        const double index_log = std::log1p((rows[i][idx] - rows[i - 1][idx]) / rows[i][idx]);
        EXPECT_EQ(rec.decision == Decision::skipped_index_down, index_log <= 0.0) << "day " << i;
        if (rec.decision == Decision::skipped_index_down)
            continue;
        double best = -INFINITY;
        for (Eigen::Index c = 0; c < prices.cols(); ++c)
        {
            if (c == idx)
                continue;
            double sum = 0.0;
            for (Eigen::Index t = i - 49; t <= i; ++t)
                sum += std::log1p((rows[t][c] - rows[t - 1][c]) / rows[t][c]);
            best = std::max(best, sum / 50.0);
        }
        const double target = 2.0 * index_log;
        if (std::abs(best - target) > 1e-15)
            EXPECT_EQ(rec.decision == Decision::skipped_infeasible, best < target) << "day " << i;
    }
    EXPECT_EQ(result.trade_count + result.skipped_index_down + result.skipped_infeasible, result.evaluated_days());
}

TEST(StrategyRules, AccountingIdentityAndBudget)
{
    const auto prices = seed42_fixture();
    const auto returns = compute_returns(prices);
    std::size_t checked = 0;
    for (int q : {1, 3, 7, 21, 42})
        for (double k : {0.5, 1.0, 2.0})
        {
            const auto result = run_simulation(prices, returns, params_of(50, q, k));
            for (const auto& rec : result.trades)
            {
                if (rec.decision != Decision::traded)
                    continue;
                EXPECT_EQ(rec.daily_avg_return * q, rec.round_trip_return);
                EXPECT_NEAR(rec.weights.sum(), 1.0, 1e-15);
                EXPECT_GE(rec.weights.minCoeff(), 0.0);
                double rt = 0.0;
                for (Eigen::Index j = 0; j < rec.weights.size(); ++j)
                    rt += rec.weights(j) * (rec.exit_prices(j) - rec.entry_prices(j)) / rec.entry_prices(j);
                EXPECT_NEAR(rec.round_trip_return, rt, 1e-15);
                ++checked;
            }
        }
    EXPECT_GT(checked, 100u);
}

TEST(StrategyRules, Deterministic)
{
    const auto prices = seed42_fixture();
    const auto returns = compute_returns(prices);
    auto params = params_of(50, 21, 1.0);
    params.window = WindowSpec::half_gaussian(50);
    const auto a = run_simulation(prices, returns, params);
    const auto b = run_simulation(prices, returns, params);
    ASSERT_EQ(a.trades.size(), b.trades.size());
    for (std::size_t i = 0; i < a.trades.size(); ++i)
        EXPECT_TRUE(same_record(a.trades[i], b.trades[i]));
    EXPECT_EQ(a.real_avg, b.real_avg);
}

TEST(StrategyRules, SolutionsPassKktCheck)
{
    const auto prices = seed42_fixture();
    auto params = params_of(50, 21, 1.0);
    params.verify_kkt = true;
    const auto result = run_simulation(prices, compute_returns(prices), params);
    ASSERT_GT(result.trade_count, 0u);
    EXPECT_EQ(result.kkt_flags, 0u);
    for (const auto& rec : result.trades)
        if (rec.decision == Decision::traded)
            EXPECT_TRUE(rec.kkt_checked);
}

TEST(StrategyParams, Validation)
{
    auto p = params_of(50, 21, 2.0);
    EXPECT_NO_THROW(p.validate());
    p.window = WindowSpec::rectangular(40);
    EXPECT_THROW(p.validate(), DataError);
    EXPECT_THROW(params_of(1, 21, 2.0).validate(), DataError);
    EXPECT_THROW(params_of(50, 0, 2.0).validate(), DataError);
    EXPECT_THROW(params_of(50, 21, 0.0).validate(), DataError);
}

TEST(StrategyParams, InvestableSet)
{
    const auto prices = seed42_fixture();
    auto p = params_of(50, 21, 2.0);
    EXPECT_EQ(p.investable_columns(prices).size(), 6u);
    p.include_index = true;
    EXPECT_EQ(p.investable_columns(prices).size(), 7u);
    p.investable = {"A02", "A05"};
    EXPECT_EQ(p.investable_columns(prices), (std::vector<Eigen::Index>{1, 4}));
    p.investable = {"A02", "A02"};
    EXPECT_THROW(p.investable_columns(prices), DataError);
    p.investable = {"nope"};
    EXPECT_THROW(p.investable_columns(prices), DataError);
}
