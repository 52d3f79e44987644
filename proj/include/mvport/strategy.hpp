/**
 * @file strategy.hpp
 * @brief Fixed-holding-period trading simulation.
 *
 * For each evaluated day i:
 *   1. skip if the index log return of day i is not strictly positive;
 *   2. estimate mean/covariance of the investable assets over the past p days;
 *   3. target R0 = k * (index log return of day i); skip if unreachable;
 *   4. buy the minimum-variance long-only portfolio at day i's close and
 *      sell it at day i+q's close, whatever happens in between.
 *
 * Each trade is an independent unit-capital round trip; overlapping trades
 * do not interact.
 */

#pragma once

#include "mvport/estimator.hpp"
#include "mvport/market_data.hpp"
#include "mvport/qp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvport
{

struct StrategyParams
{
    int observation_p = 50;
    int holding_q = 21;
    double multiple_k = 2.0;
    WindowSpec window = WindowSpec::rectangular(50);
    /// Explicit investable assets; empty means every asset except the index
    /// (plus the index when include_index is set).
    std::vector<std::string> investable;
    bool include_index = false;
    ReturnConvention convention = ReturnConvention::current_price;
    /// Absolute ridge; unset selects default_ridge(cov) per day.
    std::optional<double> ridge;
    QpOptions qp;
    /// Re-check every solution with verify_kkt and record the outcome.
    bool verify_kkt = false;

    void validate() const;
    std::vector<Eigen::Index> investable_columns(const PriceTable& prices) const;
};

enum class Decision
{
    traded,
    skipped_index_down,
    skipped_infeasible,
};

std::string_view to_string(Decision decision);

struct TradeRecord
{
    Eigen::Index entry_day = 0;
    Eigen::Index exit_day = 0;
    std::string entry_date;
    std::string exit_date;
    Decision decision = Decision::skipped_index_down;
    double index_return = 0.0; ///< log return of the index on the entry day
    double target = 0.0;       ///< R0, set when the optimizer was consulted
    Eigen::VectorXd weights;   ///< empty unless traded
    Eigen::VectorXd entry_prices;
    Eigen::VectorXd exit_prices;
    double round_trip_return = 0.0;
    double daily_avg_return = 0.0;
    double reference_daily_avg = 0.0;
    bool kkt_checked = false;
    bool kkt_flagged = false;
    double kkt_max_gap = 0.0;
};

struct SimulationResult
{
    StrategyParams params;
    std::vector<std::string> investable;
    std::vector<TradeRecord> trades; ///< one record per evaluated day
    std::optional<double> real_avg;
    std::optional<double> reference_avg;
    std::size_t trade_count = 0;
    std::size_t skipped_index_down = 0;
    std::size_t skipped_infeasible = 0;
    std::size_t kkt_flags = 0;

    std::size_t evaluated_days() const { return trades.size(); }
};

/// ((P_idx(i+q) - P_idx(i)) / P_idx(i)) / q
double reference_return(Eigen::Index day, int holding_q, const PriceTable& prices);

TradeRecord evaluate_day(Eigen::Index day,
                         const PriceTable& prices,
                         const ReturnTable& returns,
                         const StrategyParams& params);

/// Evaluates every day in [p, last_day - q].
SimulationResult run_simulation(const PriceTable& prices, const ReturnTable& returns, const StrategyParams& params);

/// First and last evaluable day; nullopt when the range is empty.
std::optional<std::pair<Eigen::Index, Eigen::Index>> evaluable_range(const PriceTable& prices,
                                                                     int observation_p,
                                                                     int holding_q);

} // namespace mvport
