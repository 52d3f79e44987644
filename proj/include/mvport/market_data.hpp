/**
 * @file market_data.hpp
 * @brief Price ingestion and daily return series.
 *
 * A "day" throughout the library is a row index into the trading calendar
 * of a PriceTable. Day 0 has a price but no return; returns exist for days
 * 1 .. rows()-1.
 */

#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvport
{

/// How the simple return of a day is formed from two consecutive closes.
enum class ReturnConvention
{
    current_price, ///< (P_t - P_{t-1}) / P_t
    standard,      ///< (P_t - P_{t-1}) / P_{t-1}
};

std::optional<ReturnConvention> parse_convention(std::string_view text);
std::string_view to_string(ReturnConvention convention);

/// Dated closing prices, one row per trading day and one column per asset.
/// Immutable after construction; the constructor enforces every invariant.
class PriceTable
{
public:
    PriceTable(std::vector<std::string> dates,
               std::vector<std::string> assets,
               Eigen::MatrixXd prices,
               std::string index_column);

    const std::vector<std::string>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& assets() const noexcept { return assets_; }
    const Eigen::MatrixXd& prices() const noexcept { return prices_; }
    const std::string& index_column() const noexcept { return index_column_; }

    Eigen::Index rows() const noexcept { return prices_.rows(); }
    Eigen::Index cols() const noexcept { return prices_.cols(); }
    Eigen::Index index_position() const noexcept { return index_position_; }

    /// Column of an asset identifier; throws DataError if unknown.
    Eigen::Index column_of(std::string_view asset) const;

    double price(Eigen::Index day, Eigen::Index column) const { return prices_(day, column); }

private:
    std::vector<std::string> dates_;
    std::vector<std::string> assets_;
    Eigen::MatrixXd prices_;
    std::string index_column_;
    Eigen::Index index_position_ = 0;
};

/// Simple and logarithmic returns aligned to the calendar of the source
/// prices. Row r holds the return of day r + 1.
class ReturnTable
{
public:
    ReturnTable(std::vector<std::string> dates,
                std::vector<std::string> assets,
                Eigen::MatrixXd simple,
                Eigen::MatrixXd log,
                std::string index_column);

    /// Builds a table directly from log returns (simple = expm1(log)).
    /// `dates` are the dates of the return days, i.e. days 1..n.
    static ReturnTable from_log_returns(std::vector<std::string> dates,
                                        std::vector<std::string> assets,
                                        Eigen::MatrixXd log,
                                        std::string index_column);

    const std::vector<std::string>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& assets() const noexcept { return assets_; }
    const Eigen::MatrixXd& simple() const noexcept { return simple_; }
    const Eigen::MatrixXd& log() const noexcept { return log_; }
    const std::string& index_column() const noexcept { return index_column_; }

    Eigen::Index rows() const noexcept { return log_.rows(); }
    Eigen::Index cols() const noexcept { return log_.cols(); }
    Eigen::Index column_of(std::string_view asset) const;
    Eigen::Index index_position() const { return column_of(index_column_); }

    static constexpr Eigen::Index first_day = 1;
    Eigen::Index last_day() const noexcept { return log_.rows(); }

    /// Log return of `column` on calendar day `day` (1 <= day <= last_day()).
    double log_return(Eigen::Index day, Eigen::Index column) const { return log_(day - 1, column); }
    const std::string& date_of_day(Eigen::Index day) const { return dates_.at(static_cast<std::size_t>(day - 1)); }

private:
    std::vector<std::string> dates_;
    std::vector<std::string> assets_;
    Eigen::MatrixXd simple_;
    Eigen::MatrixXd log_;
    std::string index_column_;
};

/// Parses the price CSV format: header `date,<asset>...`, ISO dates, one row
/// per trading day. Rows are returned sorted by date. Errors carry the
/// line number and column name.
PriceTable parse_prices(std::istream& in, std::string_view index_id, std::string_view source = "<stream>");
PriceTable load_prices(const std::string& path, std::string_view index_id);

/// Writes prices in the same CSV format, with round-trip precision.
void write_prices(std::ostream& out, const PriceTable& table);
void save_prices(const std::string& path, const PriceTable& table);

ReturnTable compute_returns(const PriceTable& prices, ReturnConvention convention = ReturnConvention::current_price);

/// True for a well-formed yyyy-mm-dd calendar date.
bool is_iso_date(std::string_view text);

} // namespace mvport
