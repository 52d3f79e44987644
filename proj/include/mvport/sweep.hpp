/**
 * @file sweep.hpp
 * @brief Grid of simulations over (k, observation length, holding length).
 */

#pragma once

#include "mvport/estimator.hpp"
#include "mvport/market_data.hpp"
#include "mvport/strategy.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvport
{

struct SweepGrid
{
    std::vector<double> k_values;
    std::vector<int> observation_lengths;
    std::vector<int> holding_lengths;
    WindowShape window_shape = WindowShape::rectangular;
    /// Fixed half-Gaussian sigma in days; unset means p / 2 for each cell.
    std::optional<double> sigma;
    /// Template for every cell; p, q, k and the window are overwritten.
    StrategyParams base;

    void validate() const;
    StrategyParams params_for(double k, int p, int q) const;
};

enum class CellStatus
{
    ok,            ///< at least one trade
    empty,         ///< evaluable, but no day traded
    not_evaluable, ///< p + q leaves no day to evaluate
};

std::string_view to_string(CellStatus status);

struct SweepCell
{
    double k = 0.0;
    int p = 0;
    int q = 0;
    CellStatus status = CellStatus::not_evaluable;
    std::optional<double> reference_avg;
    std::optional<double> real_avg;
    std::size_t trade_count = 0;
    std::size_t skipped_index_down = 0;
    std::size_t skipped_infeasible = 0;
    std::size_t kkt_flags = 0;
    std::string reason;
};

struct SweepMetadata
{
    std::uint64_t data_fingerprint = 0;
    std::string version;
    std::vector<double> k_values;
    std::vector<int> observation_lengths;
    std::vector<int> holding_lengths;
};

struct SweepTable
{
    /// Sorted by (k, p, q) regardless of the order the grid lists them.
    std::vector<SweepCell> cells;
    SweepMetadata metadata;

    const SweepCell* find(double k, int p, int q) const;
};

/// FNV-1a over dates, identifiers and the raw bytes of every price.
std::uint64_t fingerprint(const PriceTable& prices);

/// Runs one simulation per grid point; `jobs` worker threads (>= 1).
/// The result does not depend on `jobs` or on grid order.
SweepTable run_sweep(const PriceTable& prices, const ReturnTable& returns, const SweepGrid& grid, int jobs = 1);

/// Cell reduced from a finished simulation.
SweepCell reduce_cell(double k, int p, int q, const SimulationResult& result);

struct BestCell
{
    int p = 0;
    int q = 0;
    double real_avg = 0.0;
    double reference_avg = 0.0;
};

/// Highest real_avg among cells with trades for this k; ties go to smaller
/// p, then smaller q. Throws DataError when no such cell exists.
BestCell best_cell(const SweepTable& table, double k);

} // namespace mvport
