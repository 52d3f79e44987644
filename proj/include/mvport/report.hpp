/**
 * @file report.hpp
 * @brief Plot-ready CSV output: risk/return scatter, rolling statistics,
 *        per-run daily series, trade logs and the sweep table.
 *
 * Series values are written with 6 significant digits. Sweep tables hold
 * mean daily returns in basis points with 2 decimals. Lines starting with
 * '#' are comments and are skipped by the parsers below.
 */

#pragma once

#include "mvport/estimator.hpp"
#include "mvport/market_data.hpp"
#include "mvport/strategy.hpp"
#include "mvport/sweep.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvport
{

struct ScatterPoint
{
    std::string asset;
    double mean_return = 0.0;
    double std_return = 0.0;
};

/// Full-history population mean and standard deviation of log returns for
/// every column, the index included.
std::vector<ScatterPoint> risk_return_scatter(const ReturnTable& returns);

void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points);
void write_rolling_csv(std::ostream& out, std::span<const RollingPoint> points);
void write_run_series(std::ostream& out, const SimulationResult& result);
void write_trade_log(std::ostream& out, const SimulationResult& result);
void write_sweep_csv(std::ostream& out, const SweepTable& table);

void emit_scatter_csv(std::span<const ScatterPoint> points, const std::string& path);
void emit_rolling_csv(std::span<const RollingPoint> points, const std::string& path);
void emit_run_series(const SimulationResult& result, const std::string& path);
void emit_trade_log(const SimulationResult& result, const std::string& path);
void emit_sweep_csv(const SweepTable& table, const std::string& path);

/// Basis points per unit of daily return.
inline constexpr double kBasisPoints = 1e4;

struct RunSeriesRow
{
    std::string date;
    std::optional<double> portfolio_daily;
    std::optional<double> reference_daily;
    std::string decision;
};

std::vector<RunSeriesRow> parse_run_series(std::istream& in);

struct ParsedSweepCell
{
    double k = 0.0;
    int p = 0;
    int q = 0;
    std::optional<double> reference_bp;
    std::optional<double> real_bp;
};

std::vector<ParsedSweepCell> parse_sweep_csv(std::istream& in);

std::vector<ScatterPoint> parse_scatter_csv(std::istream& in);

} // namespace mvport
