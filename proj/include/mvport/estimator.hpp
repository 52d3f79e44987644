/**
 * @file estimator.hpp
 * @brief Sliding-window estimates of expected returns and covariances.
 *
 * A window of length n for as-of day t covers days t-n+1 .. t inclusive.
 * Each day in the window carries a weight; weights sum to one and the
 * estimates use the weighted-population form (no bias correction):
 *
 *     mean_j  = sum_d w_d r_j(d)
 *     cov_jk  = sum_d w_d (r_j(d) - mean_j)(r_k(d) - mean_k)
 */

#pragma once

#include "mvport/market_data.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvport
{

enum class WindowShape
{
    rectangular,
    half_gaussian, ///< left half of a normal density, peak on the most recent day
};

std::optional<WindowShape> parse_window_shape(std::string_view text);
std::string_view to_string(WindowShape shape);

struct WindowSpec
{
    int length = 2;
    WindowShape shape = WindowShape::rectangular;
    /// Gaussian scale in days; unset means length / 2.
    std::optional<double> sigma;

    static WindowSpec rectangular(int length) { return {length, WindowShape::rectangular, std::nullopt}; }
    static WindowSpec half_gaussian(int length, std::optional<double> sigma = std::nullopt)
    {
        return {length, WindowShape::half_gaussian, sigma};
    }

    double effective_sigma() const { return sigma.value_or(0.5 * length); }
    void validate() const;
};

/// Expected-return vector and covariance matrix seen from one window.
struct EstimateSet
{
    Eigen::Index as_of_day = 0;
    std::vector<std::string> assets;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    WindowSpec window;
};

/// Weights ordered oldest to newest; nonnegative and normalized to sum 1.
Eigen::VectorXd window_weights(const WindowSpec& spec);

EstimateSet estimate(const ReturnTable& returns,
                     Eigen::Index as_of_day,
                     const WindowSpec& spec,
                     std::span<const std::string> assets);

/// Same as above, addressing assets by column and reusing precomputed weights.
/// `weights` must come from window_weights(spec).
EstimateSet estimate(const ReturnTable& returns,
                     Eigen::Index as_of_day,
                     const WindowSpec& spec,
                     std::span<const Eigen::Index> columns,
                     const Eigen::VectorXd& weights);

struct RollingPoint
{
    Eigen::Index day = 0;
    std::string date;
    double mean = 0.0;
    double std = 0.0;
};

/// One point per day from day n to the last day of the table.
std::vector<RollingPoint> rolling_stats(const ReturnTable& returns, std::string_view asset, const WindowSpec& spec);

} // namespace mvport
