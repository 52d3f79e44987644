/**
 * @file synthetic.hpp
 * @brief Seeded synthetic price histories.
 *
 * Daily log returns are i.i.d. multivariate normal, x_t = mean + L z_t with
 * L the lower Cholesky factor of the target covariance and z_t standard
 * normals from the Marsaglia polar method driven by std::mt19937_64.
 * Both the factorization and the sampler are implemented here so a seed
 * pins the output bit for bit.
 */

#pragma once

#include "mvport/market_data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

namespace mvport
{

enum class IndexRule
{
    equal_weight_of_assets, ///< extra INDEX column = mean of the asset prices
    explicit_column,        ///< the last generated column is the index
};

struct SynthSpec
{
    std::size_t assets = 1;
    /// Price rows (trading days); days - 1 return rows are drawn.
    std::size_t days = 2;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    std::uint64_t seed = 42;
    Eigen::VectorXd initial_prices;
    IndexRule index_rule = IndexRule::equal_weight_of_assets;
    std::string index_name = "INDEX";
    std::string start_date = "2001-01-02";

    void validate() const;
};

struct SynthData
{
    PriceTable prices;
    /// (days - 1) x assets log returns actually drawn.
    Eigen::MatrixXd log_returns;
};

/// Lower-triangular L with L L' = cov for symmetric PSD input. Zero pivots
/// (within 1e-12 of the largest diagonal) yield zero columns; a negative
/// pivot throws DataError.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& cov);

class NormalSampler
{
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
    double operator()();

private:
    double uniform_pm1();

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Consecutive weekdays starting at `start` (yyyy-mm-dd).
std::vector<std::string> business_days(const std::string& start, std::size_t count);

SynthData generate(const SynthSpec& spec);

/// A market-like spec: drifts spread over [0.5, 1.5] x drift, volatilities
/// over [0.6, 1.4] x vol, constant pairwise correlation, prices start at 100.
SynthSpec make_market_spec(std::size_t assets,
                           std::size_t days,
                           std::uint64_t seed,
                           double drift = 3e-4,
                           double vol = 0.02,
                           double correlation = 0.3);

} // namespace mvport
