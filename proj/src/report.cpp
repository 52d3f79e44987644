#include "mvport/report.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mvport
{

namespace
{

std::string series_value(double v)
{
    return fmt::format("{:.6g}", v);
}

std::string basis_points(const std::optional<double>& v)
{
    return v ? fmt::format("{:.2f}", *v * kBasisPoints) : std::string();
}

template <class Writer>
void write_file(const std::string& path, Writer&& writer)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path));
    writer(out);
    out.flush();
    if (!out)
        throw IoError(fmt::format("write to '{}' failed", path));
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::optional<double> optional_number(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DataError(fmt::format("'{}' is not a number", s));
    return v;
}

double number(const std::string& s)
{
    auto v = optional_number(s);
    if (!v)
        throw DataError("missing number");
    return *v;
}

bool getline_stripped(std::istream& in, std::string& line)
{
    if (!std::getline(in, line))
        return false;
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return true;
}

std::string describe_params(const StrategyParams& p)
{
    return fmt::format("k={:g} p={} q={} window={} sigma={} convention={} ridge={}", p.multiple_k,
                       p.observation_p, p.holding_q, to_string(p.window.shape),
                       p.window.shape == WindowShape::half_gaussian ? fmt::format("{:g}", p.window.effective_sigma())
                                                                    : std::string("-"),
                       to_string(p.convention), p.ridge ? fmt::format("{:g}", *p.ridge) : std::string("relative"));
}

} // namespace

std::vector<ScatterPoint> risk_return_scatter(const ReturnTable& returns)
{
    const Eigen::Index n = returns.rows();
    if (n < 1)
        throw DataError("scatter needs at least one return");
    std::vector<ScatterPoint> points;
    for (Eigen::Index c = 0; c < returns.cols(); ++c)
    {
        const auto col = returns.log().col(c);
        const double mean = col.sum() / static_cast<double>(n);
        const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
        points.push_back({returns.assets()[static_cast<std::size_t>(c)], mean, std::sqrt(var)});
    }
    return points;
}

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points)
{
    std::string buf = "asset,mean,std\n";
    for (const auto& p : points)
        fmt::format_to(std::back_inserter(buf), "{},{},{}\n", p.asset, series_value(p.mean_return),
                       series_value(p.std_return));
    out << buf;
}

void write_rolling_csv(std::ostream& out, std::span<const RollingPoint> points)
{
    std::string buf = "day,date,mean,std\n";
    for (const auto& p : points)
        fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", p.day, p.date, series_value(p.mean),
                       series_value(p.std));
    out << buf;
}

void write_run_series(std::ostream& out, const SimulationResult& result)
{
    std::string buf;
    fmt::format_to(std::back_inserter(buf), "# mvport run series\n# {}\n# investable={}\n",
                   describe_params(result.params), fmt::join(result.investable, ";"));
    buf += "date,portfolio_daily,reference_daily,decision\n";
    std::optional<double> lo;
    std::optional<double> hi;
    for (const auto& t : result.trades)
    {
        if (t.decision == Decision::traded)
        {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", t.entry_date, series_value(t.daily_avg_return),
                           series_value(t.reference_daily_avg), to_string(t.decision));
            lo = std::min(lo.value_or(t.daily_avg_return), t.daily_avg_return);
            hi = std::max(hi.value_or(t.daily_avg_return), t.daily_avg_return);
        }
        else
        {
            fmt::format_to(std::back_inserter(buf), "{},,,{}\n", t.entry_date, to_string(t.decision));
        }
    }
    fmt::format_to(std::back_inserter(buf), "# trades={} skipped_index_down={} skipped_infeasible={}\n",
                   result.trade_count, result.skipped_index_down, result.skipped_infeasible);
    if (lo)
        fmt::format_to(std::back_inserter(buf),
                       "# real_avg={} reference_avg={}\n# min_portfolio_daily={} max_portfolio_daily={}\n",
                       series_value(*result.real_avg), series_value(*result.reference_avg), series_value(*lo),
                       series_value(*hi));
    out << buf;
}

void write_trade_log(std::ostream& out, const SimulationResult& result)
{
    std::string buf = "entry_date,exit_date,decision,ref_daily,real_daily";
    for (const auto& a : result.investable)
        fmt::format_to(std::back_inserter(buf), ",w_{}", a);
    buf += '\n';
    for (const auto& t : result.trades)
    {
        fmt::format_to(std::back_inserter(buf), "{},{},{},{}", t.entry_date, t.exit_date, to_string(t.decision),
                       series_value(t.reference_daily_avg));
        if (t.decision == Decision::traded)
        {
            fmt::format_to(std::back_inserter(buf), ",{}", series_value(t.daily_avg_return));
            for (Eigen::Index j = 0; j < t.weights.size(); ++j)
                fmt::format_to(std::back_inserter(buf), ",{}", series_value(t.weights(j)));
        }
        else
        {
            buf += ',';
            for (std::size_t j = 0; j < result.investable.size(); ++j)
                buf += ',';
        }
        buf += '\n';
    }
    out << buf;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table)
{
    const auto& meta = table.metadata;
    if (table.cells.empty())
        throw DataError("sweep table is empty");
    std::string buf;
    fmt::format_to(std::back_inserter(buf),
                   "# mvport sweep: mean daily returns in basis points; blank = no trades or not evaluable\n"
                   "# data_fingerprint={:016x} version={}\n",
                   meta.data_fingerprint, meta.version);
    for (std::size_t b = 0; b < meta.k_values.size(); ++b)
    {
        const double k = meta.k_values[b];
        if (b > 0)
            buf += '\n';
        fmt::format_to(std::back_inserter(buf), "For k={:g},Trading Period(Days)", k);
        for (std::size_t i = 1; i < 2 * meta.holding_lengths.size(); ++i)
            buf += ',';
        buf += "\nObservation Period(Days)";
        for (int q : meta.holding_lengths)
            fmt::format_to(std::back_inserter(buf), ",{},{}", q, q);
        buf += '\n';
        for (std::size_t i = 0; i < meta.holding_lengths.size(); ++i)
            buf += ",Reference,Real";
        buf += '\n';
        for (int p : meta.observation_lengths)
        {
            fmt::format_to(std::back_inserter(buf), "{}", p);
            for (int q : meta.holding_lengths)
            {
                const auto* cell = table.find(k, p, q);
                if (!cell)
                    throw DataError(fmt::format("sweep table lacks cell k={:g} p={} q={}", k, p, q));
                const bool filled = cell->status == CellStatus::ok;
                fmt::format_to(std::back_inserter(buf), ",{},{}",
                               filled ? basis_points(cell->reference_avg) : std::string(),
                               filled ? basis_points(cell->real_avg) : std::string());
            }
            buf += '\n';
        }
    }
    out << buf;
}

void emit_scatter_csv(std::span<const ScatterPoint> points, const std::string& path)
{
    write_file(path, [&](std::ostream& out) { write_scatter_csv(out, points); });
}

void emit_rolling_csv(std::span<const RollingPoint> points, const std::string& path)
{
    write_file(path, [&](std::ostream& out) { write_rolling_csv(out, points); });
}

void emit_run_series(const SimulationResult& result, const std::string& path)
{
    if (result.trades.empty())
        throw DataError("simulation result has no evaluated days");
    write_file(path, [&](std::ostream& out) { write_run_series(out, result); });
}

void emit_trade_log(const SimulationResult& result, const std::string& path)
{
    write_file(path, [&](std::ostream& out) { write_trade_log(out, result); });
}

void emit_sweep_csv(const SweepTable& table, const std::string& path)
{
    if (table.cells.empty())
        throw DataError("sweep table is empty");
    write_file(path, [&](std::ostream& out) { write_sweep_csv(out, table); });
}

std::vector<RunSeriesRow> parse_run_series(std::istream& in)
{
    std::vector<RunSeriesRow> rows;
    std::string line;
    bool header = false;
    while (getline_stripped(in, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header)
        {
            if (line != "date,portfolio_daily,reference_daily,decision")
                throw DataError("run series: unexpected header");
            header = true;
            continue;
        }
        auto f = split(line);
        if (f.size() != 4)
            throw DataError(fmt::format("run series: expected 4 fields in '{}'", line));
        rows.push_back({f[0], optional_number(f[1]), optional_number(f[2]), f[3]});
    }
    return rows;
}

std::vector<ParsedSweepCell> parse_sweep_csv(std::istream& in)
{
    std::vector<ParsedSweepCell> cells;
    std::string line;
    double k = 0.0;
    bool in_block = false;
    std::vector<int> holding;
    int header_lines = 0;
    while (getline_stripped(in, line))
    {
        if (!line.empty() && line[0] == '#')
            continue;
        if (line.empty())
        {
            in_block = false;
            continue;
        }
        auto f = split(line);
        if (f[0].rfind("For k=", 0) == 0)
        {
            k = number(f[0].substr(6));
            in_block = true;
            holding.clear();
            header_lines = 1;
            continue;
        }
        if (!in_block)
            throw DataError(fmt::format("sweep csv: row outside a block: '{}'", line));
        if (header_lines == 1)
        {
            for (std::size_t i = 1; i + 1 < f.size(); i += 2)
                holding.push_back(static_cast<int>(number(f[i])));
            header_lines = 2;
            continue;
        }
        if (header_lines == 2)
        {
            header_lines = 3;
            continue;
        }
        if (f.size() != 1 + 2 * holding.size())
            throw DataError(fmt::format("sweep csv: expected {} fields in '{}'", 1 + 2 * holding.size(), line));
        const int p = static_cast<int>(number(f[0]));
        for (std::size_t i = 0; i < holding.size(); ++i)
            cells.push_back({k, p, holding[i], optional_number(f[1 + 2 * i]), optional_number(f[2 + 2 * i])});
    }
    return cells;
}

std::vector<ScatterPoint> parse_scatter_csv(std::istream& in)
{
    std::vector<ScatterPoint> points;
    std::string line;
    bool header = false;
    while (getline_stripped(in, line))
    {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header)
        {
            header = true;
            continue;
        }
        auto f = split(line);
        if (f.size() != 3)
            throw DataError(fmt::format("scatter csv: expected 3 fields in '{}'", line));
        points.push_back({f[0], number(f[1]), number(f[2])});
    }
    return points;
}

} // namespace mvport
