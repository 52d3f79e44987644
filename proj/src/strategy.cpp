#include "mvport/strategy.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace mvport
{

namespace
{

// Picks the round-trip value within a few ulps of `round_trip` for which
// (round_trip / q) * q reproduces it bit for bit, so the per-day figure and
// the round trip are interchangeable in accounting.
double settle_daily_average(double& round_trip, int q)
{
    const auto qd = static_cast<double>(q);
    double up = round_trip;
    double down = round_trip;
    for (int step = 0; step <= 8; ++step)
    {
        for (double candidate : {up, down})
        {
            const double daily = candidate / qd;
            if (daily * qd == candidate)
            {
                round_trip = candidate;
                return daily;
            }
        }
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
    }
    return round_trip / qd;
}

void check_alignment(const PriceTable& prices, const ReturnTable& returns)
{
    if (returns.rows() != prices.rows() - 1 || returns.assets() != prices.assets())
        throw DataError("return table was not computed from this price table");
}

struct DayContext
{
    const PriceTable& prices;
    const ReturnTable& returns;
    const StrategyParams& params;
    std::vector<Eigen::Index> columns;
    Eigen::VectorXd weights;
};

TradeRecord evaluate(Eigen::Index day, const DayContext& ctx)
{
    const auto& params = ctx.params;
    const int q = params.holding_q;
    if (day < params.observation_p || day + q > ctx.prices.rows() - 1)
        throw DataError(fmt::format("day {} is outside the evaluable range for p={}, q={}", day,
                                    params.observation_p, q));

    TradeRecord rec;
    rec.entry_day = day;
    rec.exit_day = day + q;
    rec.entry_date = ctx.prices.dates()[static_cast<std::size_t>(day)];
    rec.exit_date = ctx.prices.dates()[static_cast<std::size_t>(day + q)];
    rec.reference_daily_avg = reference_return(day, q, ctx.prices);
    rec.index_return = ctx.returns.log_return(day, ctx.prices.index_position());

    if (!(rec.index_return > 0.0))
    {
        rec.decision = Decision::skipped_index_down;
        return rec;
    }

    EstimateSet est;
    try
    {
        est = estimate(ctx.returns, day, params.window, ctx.columns, ctx.weights);
    }
    catch (const Error& e)
    {
        throw DataError(fmt::format("day {} ({}): {}", day, rec.entry_date, e.what()));
    }
    rec.target = params.multiple_k * rec.index_return;
    if (!is_feasible(est.mean, rec.target))
    {
        rec.decision = Decision::skipped_infeasible;
        return rec;
    }

    QpProblem problem{est.cov, est.mean, rec.target, params.ridge.value_or(default_ridge(est.cov))};
    PortfolioSolution sol;
    try
    {
        sol = solve(problem, params.qp);
    }
    catch (const NumericalError& e)
    {
        throw NumericalError(fmt::format("day {} ({}): {}", day, rec.entry_date, e.what()));
    }
    if (sol.status != QpStatus::optimal)
    {
        rec.decision = Decision::skipped_infeasible;
        return rec;
    }
    if (params.verify_kkt)
    {
        const auto report = verify_kkt(problem, sol, params.qp.kkt_tol);
        rec.kkt_checked = true;
        rec.kkt_flagged = report.flagged;
        rec.kkt_max_gap = report.max_gap();
    }

    const auto n = static_cast<Eigen::Index>(ctx.columns.size());
    rec.decision = Decision::traded;
    rec.weights = sol.weights;
    rec.entry_prices.resize(n);
    rec.exit_prices.resize(n);
    double round_trip = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const auto col = ctx.columns[static_cast<std::size_t>(j)];
        rec.entry_prices(j) = ctx.prices.price(day, col);
        rec.exit_prices(j) = ctx.prices.price(day + q, col);
        round_trip += rec.weights(j) * (rec.exit_prices(j) - rec.entry_prices(j)) / rec.entry_prices(j);
    }
    rec.daily_avg_return = settle_daily_average(round_trip, q);
    rec.round_trip_return = round_trip;
    return rec;
}

DayContext make_context(const PriceTable& prices, const ReturnTable& returns, const StrategyParams& params)
{
    params.validate();
    check_alignment(prices, returns);
    return DayContext{prices, returns, params, params.investable_columns(prices), window_weights(params.window)};
}

} // namespace

void StrategyParams::validate() const
{
    if (observation_p < 2)
        throw DataError(fmt::format("observation period must be at least 2 days (got {})", observation_p));
    if (holding_q < 1)
        throw DataError(fmt::format("holding period must be at least 1 day (got {})", holding_q));
    if (!(multiple_k > 0.0) || !std::isfinite(multiple_k))
        throw DataError(fmt::format("target multiple must be positive (got {})", multiple_k));
    if (window.length != observation_p)
        throw DataError(fmt::format("window length {} differs from the observation period {}", window.length,
                                    observation_p));
    window.validate();
    if (ridge && !(*ridge >= 0.0))
        throw DataError(fmt::format("ridge must be nonnegative (got {})", *ridge));
}

std::vector<Eigen::Index> StrategyParams::investable_columns(const PriceTable& prices) const
{
    std::vector<Eigen::Index> cols;
    if (!investable.empty())
    {
        for (const auto& a : investable)
        {
            const auto c = prices.column_of(a);
            if (std::find(cols.begin(), cols.end(), c) != cols.end())
                throw DataError(fmt::format("asset '{}' listed twice in the investable set", a));
            cols.push_back(c);
        }
        return cols;
    }
    for (Eigen::Index c = 0; c < prices.cols(); ++c)
        if (include_index || c != prices.index_position())
            cols.push_back(c);
    if (cols.empty())
        throw DataError("the investable set is empty");
    return cols;
}

std::string_view to_string(Decision decision)
{
    switch (decision)
    {
    case Decision::traded:
        return "traded";
    case Decision::skipped_index_down:
        return "skipped_index_down";
    case Decision::skipped_infeasible:
        return "skipped_infeasible";
    }
    return "unknown";
}

double reference_return(Eigen::Index day, int holding_q, const PriceTable& prices)
{
    if (holding_q < 1 || day < 0 || day + holding_q > prices.rows() - 1)
        throw DataError(fmt::format("reference return: day {} with q={} is outside the price history", day,
                                    holding_q));
    const auto idx = prices.index_position();
    const double entry = prices.price(day, idx);
    const double exit = prices.price(day + holding_q, idx);
    return ((exit - entry) / entry) / static_cast<double>(holding_q);
}

TradeRecord evaluate_day(Eigen::Index day,
                         const PriceTable& prices,
                         const ReturnTable& returns,
                         const StrategyParams& params)
{
    return evaluate(day, make_context(prices, returns, params));
}

std::optional<std::pair<Eigen::Index, Eigen::Index>> evaluable_range(const PriceTable& prices,
                                                                     int observation_p,
                                                                     int holding_q)
{
    const Eigen::Index first = observation_p;
    const Eigen::Index last = prices.rows() - 1 - holding_q;
    if (first > last)
        return std::nullopt;
    return std::make_pair(first, last);
}

SimulationResult run_simulation(const PriceTable& prices, const ReturnTable& returns, const StrategyParams& params)
{
    const auto ctx = make_context(prices, returns, params);
    const auto range = evaluable_range(prices, params.observation_p, params.holding_q);
    if (!range)
        throw DataError(fmt::format("history of {} days leaves no evaluable day for p={}, q={}", prices.rows(),
                                    params.observation_p, params.holding_q));

    SimulationResult out;
    out.params = params;
    for (auto c : ctx.columns)
        out.investable.push_back(prices.assets()[static_cast<std::size_t>(c)]);
    out.trades.reserve(static_cast<std::size_t>(range->second - range->first + 1));

    double real_sum = 0.0;
    double reference_sum = 0.0;
    for (Eigen::Index day = range->first; day <= range->second; ++day)
    {
        auto rec = evaluate(day, ctx);
        switch (rec.decision)
        {
        case Decision::traded:
            ++out.trade_count;
            real_sum += rec.daily_avg_return;
            reference_sum += rec.reference_daily_avg;
            break;
        case Decision::skipped_index_down:
            ++out.skipped_index_down;
            break;
        case Decision::skipped_infeasible:
            ++out.skipped_infeasible;
            break;
        }
        if (rec.kkt_flagged)
            ++out.kkt_flags;
        out.trades.push_back(std::move(rec));
    }
    if (out.trade_count > 0)
    {
        out.real_avg = real_sum / static_cast<double>(out.trade_count);
        out.reference_avg = reference_sum / static_cast<double>(out.trade_count);
    }
    return out;
}

} // namespace mvport
