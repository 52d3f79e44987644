#include "mvport/market_data.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace mvport
{

namespace
{

void validate_identifiers(const std::vector<std::string>& assets)
{
    if (assets.empty())
        throw DataError("price table has no asset columns");
    std::unordered_set<std::string> seen;
    for (const auto& a : assets)
    {
        if (a.empty())
            throw DataError("empty asset identifier");
        if (!seen.insert(a).second)
            throw DataError(fmt::format("duplicate asset identifier '{}'", a));
    }
}

Eigen::Index find_column(const std::vector<std::string>& assets, std::string_view asset)
{
    auto it = std::find(assets.begin(), assets.end(), asset);
    if (it == assets.end())
        throw DataError(fmt::format("unknown asset '{}'", asset));
    return static_cast<Eigen::Index>(it - assets.begin());
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true)
    {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos)
        {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::optional<double> parse_double(std::string_view s)
{
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

} // namespace

std::optional<ReturnConvention> parse_convention(std::string_view text)
{
    if (text == "paper")
        return ReturnConvention::current_price;
    if (text == "standard")
        return ReturnConvention::standard;
    return std::nullopt;
}

std::string_view to_string(ReturnConvention convention)
{
    return convention == ReturnConvention::current_price ? "paper" : "standard";
}

bool is_iso_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        return false;
    int parts[3] = {0, 0, 0};
    const std::pair<std::size_t, std::size_t> spans[3] = {{0, 4}, {5, 2}, {8, 2}};
    for (int i = 0; i < 3; ++i)
    {
        auto [pos, len] = spans[i];
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, parts[i]);
        if (ec != std::errc{} || ptr != text.data() + pos + len)
            return false;
    }
    using namespace std::chrono;
    return year_month_day{year{parts[0]}, month{static_cast<unsigned>(parts[1])},
                          day{static_cast<unsigned>(parts[2])}}
        .ok();
}

PriceTable::PriceTable(std::vector<std::string> dates,
                       std::vector<std::string> assets,
                       Eigen::MatrixXd prices,
                       std::string index_column)
    : dates_(std::move(dates)), assets_(std::move(assets)), prices_(std::move(prices)),
      index_column_(std::move(index_column))
{
    validate_identifiers(assets_);
    if (prices_.rows() != static_cast<Eigen::Index>(dates_.size()) ||
        prices_.cols() != static_cast<Eigen::Index>(assets_.size()))
        throw DataError(fmt::format("price matrix is {}x{} but there are {} dates and {} assets",
                                    prices_.rows(), prices_.cols(), dates_.size(), assets_.size()));
    if (dates_.empty())
        throw DataError("price table has no rows");
    for (std::size_t i = 0; i < dates_.size(); ++i)
    {
        if (!is_iso_date(dates_[i]))
            throw DataError(fmt::format("row {}: '{}' is not a yyyy-mm-dd date", i, dates_[i]));
        if (i > 0 && !(dates_[i - 1] < dates_[i]))
            throw DataError(fmt::format("row {}: date {} does not follow {}", i, dates_[i], dates_[i - 1]));
    }
    for (Eigen::Index r = 0; r < prices_.rows(); ++r)
        for (Eigen::Index c = 0; c < prices_.cols(); ++c)
        {
            const double p = prices_(r, c);
            if (!std::isfinite(p) || p <= 0.0)
                throw DataError(fmt::format("row {} ({}), column '{}': price must be positive and finite (got {})",
                                            r, dates_[static_cast<std::size_t>(r)],
                                            assets_[static_cast<std::size_t>(c)], p));
        }
    auto it = std::find(assets_.begin(), assets_.end(), index_column_);
    if (it == assets_.end())
        throw DataError(fmt::format("index column '{}' is not among the assets", index_column_));
    index_position_ = static_cast<Eigen::Index>(it - assets_.begin());
}

Eigen::Index PriceTable::column_of(std::string_view asset) const
{
    return find_column(assets_, asset);
}

ReturnTable::ReturnTable(std::vector<std::string> dates,
                         std::vector<std::string> assets,
                         Eigen::MatrixXd simple,
                         Eigen::MatrixXd log,
                         std::string index_column)
    : dates_(std::move(dates)), assets_(std::move(assets)), simple_(std::move(simple)), log_(std::move(log)),
      index_column_(std::move(index_column))
{
    validate_identifiers(assets_);
    const auto n = static_cast<Eigen::Index>(dates_.size());
    if (simple_.rows() != n || log_.rows() != n || simple_.cols() != log_.cols() ||
        log_.cols() != static_cast<Eigen::Index>(assets_.size()))
        throw DataError("return table dimensions do not match dates/assets");
    find_column(assets_, index_column_);
}

ReturnTable ReturnTable::from_log_returns(std::vector<std::string> dates,
                                          std::vector<std::string> assets,
                                          Eigen::MatrixXd log,
                                          std::string index_column)
{
    Eigen::MatrixXd simple = log.unaryExpr([](double x) { return std::expm1(x); });
    return ReturnTable(std::move(dates), std::move(assets), std::move(simple), std::move(log),
                       std::move(index_column));
}

Eigen::Index ReturnTable::column_of(std::string_view asset) const
{
    return find_column(assets_, asset);
}

PriceTable parse_prices(std::istream& in, std::string_view index_id, std::string_view source)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> assets;

    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF")
            view.remove_prefix(3);
        if (trim(view).empty())
            continue;
        auto fields = split_fields(view);
        if (trim(fields[0]) != "date")
            throw DataError(fmt::format("{}:{}: first header must be 'date'", source, line_no));
        for (std::size_t i = 1; i < fields.size(); ++i)
            assets.emplace_back(trim(fields[i]));
        break;
    }
    if (assets.empty())
        throw DataError(fmt::format("{}: missing header or no asset columns", source));
    try
    {
        validate_identifiers(assets);
    }
    catch (const DataError& e)
    {
        throw DataError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
    if (std::find(assets.begin(), assets.end(), index_id) == assets.end())
        throw DataError(fmt::format("{}:{}: index column '{}' not found in header", source, line_no, index_id));

    struct Row
    {
        std::string date;
        std::vector<double> values;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    while (std::getline(in, line))
    {
        ++line_no;
        if (trim(line).empty())
            continue;
        auto fields = split_fields(line);
        if (fields.size() != assets.size() + 1)
            throw DataError(fmt::format("{}:{}: expected {} fields, found {}", source, line_no, assets.size() + 1,
                                        fields.size()));
        Row row{std::string(trim(fields[0])), {}, line_no};
        if (!is_iso_date(row.date))
            throw DataError(fmt::format("{}:{}, column 'date': '{}' is not a yyyy-mm-dd date", source, line_no,
                                        row.date));
        row.values.reserve(assets.size());
        for (std::size_t c = 0; c < assets.size(); ++c)
        {
            auto field = trim(fields[c + 1]);
            if (field.empty())
                throw DataError(fmt::format("{}:{}, column '{}': missing value", source, line_no, assets[c]));
            auto value = parse_double(field);
            if (!value)
                throw DataError(fmt::format("{}:{}, column '{}': '{}' is not a number", source, line_no, assets[c],
                                            field));
            if (!std::isfinite(*value) || *value <= 0.0)
                throw DataError(fmt::format("{}:{}, column '{}': price must be positive and finite (got {})", source,
                                            line_no, assets[c], field));
            row.values.push_back(*value);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw DataError(fmt::format("{}: no data rows", source));

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            throw DataError(fmt::format("{}:{}, column 'date': duplicate date {} (also on line {})", source,
                                        rows[i].line_no, rows[i].date, rows[i - 1].line_no));

    std::vector<std::string> dates;
    dates.reserve(rows.size());
    Eigen::MatrixXd prices(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(assets.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
    {
        dates.push_back(std::move(rows[r].date));
        for (std::size_t c = 0; c < assets.size(); ++c)
            prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[c];
    }
    return PriceTable(std::move(dates), std::move(assets), std::move(prices), std::string(index_id));
}

PriceTable load_prices(const std::string& path, std::string_view index_id)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open '{}'", path));
    return parse_prices(in, index_id, path);
}

void write_prices(std::ostream& out, const PriceTable& table)
{
    std::string buffer = "date";
    for (const auto& a : table.assets())
        fmt::format_to(std::back_inserter(buffer), ",{}", a);
    buffer += '\n';
    for (Eigen::Index r = 0; r < table.rows(); ++r)
    {
        buffer += table.dates()[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < table.cols(); ++c)
            fmt::format_to(std::back_inserter(buffer), ",{:.17g}", table.price(r, c));
        buffer += '\n';
    }
    out << buffer;
}

void save_prices(const std::string& path, const PriceTable& table)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path));
    write_prices(out, table);
    if (!out)
        throw IoError(fmt::format("write to '{}' failed", path));
}

ReturnTable compute_returns(const PriceTable& prices, ReturnConvention convention)
{
    const Eigen::Index n = prices.rows() - 1;
    if (n < 1)
        throw DataError("at least two price rows are needed to compute returns");
    const Eigen::Index cols = prices.cols();
    Eigen::MatrixXd simple(n, cols);
    Eigen::MatrixXd log(n, cols);
    const auto& p = prices.prices();
    for (Eigen::Index t = 0; t < n; ++t)
        for (Eigen::Index c = 0; c < cols; ++c)
        {
            const double prev = p(t, c);
            const double cur = p(t + 1, c);
            const double s = convention == ReturnConvention::current_price ? (cur - prev) / cur : (cur - prev) / prev;
            if (!(s > -1.0))
                throw DataError(fmt::format("{}, column '{}': simple return {} is not above -1 under the {} convention",
                                            prices.dates()[static_cast<std::size_t>(t + 1)],
                                            prices.assets()[static_cast<std::size_t>(c)], s, to_string(convention)));
            simple(t, c) = s;
            log(t, c) = std::log1p(s);
        }
    std::vector<std::string> dates(prices.dates().begin() + 1, prices.dates().end());
    return ReturnTable(std::move(dates), prices.assets(), std::move(simple), std::move(log), prices.index_column());
}

} // namespace mvport
