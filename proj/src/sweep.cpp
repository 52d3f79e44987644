#include "mvport/sweep.hpp"
#include "mvport/errors.hpp"

#include "parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <tuple>

namespace mvport
{

namespace
{

template <class T>
void check_list(const std::vector<T>& values, const char* what)
{
    if (values.empty())
        throw DataError(fmt::format("sweep grid: {} list is empty", what));
    std::set<T> seen;
    for (const auto& v : values)
    {
        if (!(v > T{0}))
            throw DataError(fmt::format("sweep grid: {} values must be positive (got {})", what, v));
        if (!seen.insert(v).second)
            throw DataError(fmt::format("sweep grid: duplicate {} value {}", what, v));
    }
}

class Fnv1a
{
public:
    void bytes(const void* data, std::size_t size)
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i)
        {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }
    void text(const std::string& s)
    {
        bytes(s.data(), s.size());
        bytes("\0", 1);
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

} // namespace

void SweepGrid::validate() const
{
    check_list(k_values, "k");
    check_list(observation_lengths, "observation length");
    check_list(holding_lengths, "holding length");
    for (int p : observation_lengths)
        if (p < 2)
            throw DataError(fmt::format("sweep grid: observation length must be at least 2 (got {})", p));
    for (double k : k_values)
        if (!std::isfinite(k))
            throw DataError("sweep grid: k values must be finite");
    if (sigma && !(*sigma > 0.0))
        throw DataError(fmt::format("sweep grid: sigma must be positive (got {})", *sigma));
}

StrategyParams SweepGrid::params_for(double k, int p, int q) const
{
    StrategyParams params = base;
    params.multiple_k = k;
    params.observation_p = p;
    params.holding_q = q;
    params.window = WindowSpec{p, window_shape, sigma};
    return params;
}

std::string_view to_string(CellStatus status)
{
    switch (status)
    {
    case CellStatus::ok:
        return "ok";
    case CellStatus::empty:
        return "empty";
    case CellStatus::not_evaluable:
        return "not_evaluable";
    }
    return "unknown";
}

const SweepCell* SweepTable::find(double k, int p, int q) const
{
    for (const auto& c : cells)
        if (c.k == k && c.p == p && c.q == q)
            return &c;
    return nullptr;
}

std::uint64_t fingerprint(const PriceTable& prices)
{
    Fnv1a h;
    h.text(prices.index_column());
    for (const auto& a : prices.assets())
        h.text(a);
    for (const auto& d : prices.dates())
        h.text(d);
    for (Eigen::Index r = 0; r < prices.rows(); ++r)
        for (Eigen::Index c = 0; c < prices.cols(); ++c)
        {
            const double v = prices.price(r, c);
            std::uint64_t bits = 0;
            std::memcpy(&bits, &v, sizeof bits);
            unsigned char le[8];
            for (int b = 0; b < 8; ++b)
                le[b] = static_cast<unsigned char>(bits >> (8 * b));
            h.bytes(le, sizeof le);
        }
    return h.value();
}

SweepCell reduce_cell(double k, int p, int q, const SimulationResult& result)
{
    SweepCell cell;
    cell.k = k;
    cell.p = p;
    cell.q = q;
    cell.trade_count = result.trade_count;
    cell.skipped_index_down = result.skipped_index_down;
    cell.skipped_infeasible = result.skipped_infeasible;
    cell.kkt_flags = result.kkt_flags;
    cell.real_avg = result.real_avg;
    cell.reference_avg = result.reference_avg;
    cell.status = result.trade_count > 0 ? CellStatus::ok : CellStatus::empty;
    if (cell.status == CellStatus::empty)
        cell.reason = "no trades";
    return cell;
}

SweepTable run_sweep(const PriceTable& prices, const ReturnTable& returns, const SweepGrid& grid, int jobs)
{
    grid.validate();
    if (jobs < 1)
        throw DataError(fmt::format("jobs must be at least 1 (got {})", jobs));

    SweepTable table;
    table.metadata.data_fingerprint = fingerprint(prices);
    table.metadata.version = MVPORT_VERSION;
    table.metadata.k_values = grid.k_values;
    table.metadata.observation_lengths = grid.observation_lengths;
    table.metadata.holding_lengths = grid.holding_lengths;
    std::sort(table.metadata.k_values.begin(), table.metadata.k_values.end());
    std::sort(table.metadata.observation_lengths.begin(), table.metadata.observation_lengths.end());
    std::sort(table.metadata.holding_lengths.begin(), table.metadata.holding_lengths.end());

    for (double k : table.metadata.k_values)
        for (int p : table.metadata.observation_lengths)
            for (int q : table.metadata.holding_lengths)
            {
                SweepCell cell;
                cell.k = k;
                cell.p = p;
                cell.q = q;
                table.cells.push_back(cell);
            }

    detail::parallel_for(table.cells.size(), jobs, [&](std::size_t i) {
        auto& cell = table.cells[i];
        if (!evaluable_range(prices, cell.p, cell.q))
        {
            cell.status = CellStatus::not_evaluable;
            cell.reason = fmt::format("p + q = {} leaves no evaluable day in {} rows", cell.p + cell.q,
                                      prices.rows());
            return;
        }
        const auto result = run_simulation(prices, returns, grid.params_for(cell.k, cell.p, cell.q));
        cell = reduce_cell(cell.k, cell.p, cell.q, result);
    });
    return table;
}

BestCell best_cell(const SweepTable& table, double k)
{
    const SweepCell* best = nullptr;
    for (const auto& c : table.cells)
    {
        if (c.k != k || c.status != CellStatus::ok || !c.real_avg)
            continue;
        if (!best)
        {
            best = &c;
            continue;
        }
        const auto key = std::make_tuple(-*c.real_avg, c.p, c.q);
        const auto best_key = std::make_tuple(-*best->real_avg, best->p, best->q);
        if (key < best_key)
            best = &c;
    }
    if (!best)
        throw DataError(fmt::format("no evaluable sweep cell with trades for k={}", k));
    return BestCell{best->p, best->q, *best->real_avg, best->reference_avg.value_or(0.0)};
}

} // namespace mvport
