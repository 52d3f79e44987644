#include "mvport/estimator.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace mvport
{

std::optional<WindowShape> parse_window_shape(std::string_view text)
{
    if (text == "rect" || text == "rectangular")
        return WindowShape::rectangular;
    if (text == "halfgauss" || text == "half_gaussian")
        return WindowShape::half_gaussian;
    return std::nullopt;
}

std::string_view to_string(WindowShape shape)
{
    return shape == WindowShape::rectangular ? "rect" : "halfgauss";
}

void WindowSpec::validate() const
{
    if (length < 2)
        throw DataError(fmt::format("window length must be at least 2 (got {})", length));
    if (shape == WindowShape::half_gaussian)
    {
        const double s = effective_sigma();
        if (!std::isfinite(s) || s <= 0.0)
            throw DataError(fmt::format("half-Gaussian sigma must be positive (got {})", s));
    }
}

Eigen::VectorXd window_weights(const WindowSpec& spec)
{
    spec.validate();
    const Eigen::Index n = spec.length;
    Eigen::VectorXd w(n);
    if (spec.shape == WindowShape::rectangular)
    {
        w.setConstant(1.0 / static_cast<double>(n));
        return w;
    }
    const double sigma = spec.effective_sigma();
    // Position i (oldest first) sits d = n-1-i days before the as-of day.
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double d = static_cast<double>(n - 1 - i);
        w(i) = std::exp(-(d * d) / (2.0 * sigma * sigma));
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        total += w(i);
    return w / total;
}

EstimateSet estimate(const ReturnTable& returns,
                     Eigen::Index as_of_day,
                     const WindowSpec& spec,
                     std::span<const std::string> assets)
{
    std::vector<Eigen::Index> columns;
    columns.reserve(assets.size());
    for (const auto& a : assets)
        columns.push_back(returns.column_of(a));
    return estimate(returns, as_of_day, spec, columns, window_weights(spec));
}

EstimateSet estimate(const ReturnTable& returns,
                     Eigen::Index as_of_day,
                     const WindowSpec& spec,
                     std::span<const Eigen::Index> columns,
                     const Eigen::VectorXd& weights)
{
    const Eigen::Index n = spec.length;
    if (weights.size() != n)
        throw DataError("window weights do not match the window length");
    if (as_of_day < n || as_of_day > returns.last_day())
        throw DataError(fmt::format("day {}: a {}-day window needs {} <= day <= {}", as_of_day, n, n,
                                    returns.last_day()));
    const auto m = static_cast<Eigen::Index>(columns.size());
    const Eigen::Index first = as_of_day - n + 1;

    Eigen::MatrixXd window(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double r = returns.log_return(first + i, columns[static_cast<std::size_t>(j)]);
            if (!std::isfinite(r))
                throw DataError(fmt::format("day {}: non-finite return in window for column '{}'", first + i,
                                            returns.assets()[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])]));
            window(i, j) = r;
        }

    EstimateSet out;
    out.as_of_day = as_of_day;
    out.window = spec;
    out.assets.reserve(columns.size());
    for (auto c : columns)
        out.assets.push_back(returns.assets()[static_cast<std::size_t>(c)]);

    out.mean = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            out.mean(j) += weights(i) * window(i, j);

    Eigen::MatrixXd centered = window.rowwise() - out.mean.transpose();
    out.cov.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = j; k < m; ++k)
        {
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                s += weights(i) * centered(i, j) * centered(i, k);
            out.cov(j, k) = s;
            out.cov(k, j) = s;
        }
    return out;
}

std::vector<RollingPoint> rolling_stats(const ReturnTable& returns, std::string_view asset, const WindowSpec& spec)
{
    const auto weights = window_weights(spec);
    const Eigen::Index column = returns.column_of(asset);
    if (returns.rows() <= spec.length)
        throw DataError(fmt::format("rolling statistics need more than {} returns (have {})", spec.length,
                                    returns.rows()));
    const Eigen::Index cols[] = {column};
    std::vector<RollingPoint> points;
    points.reserve(static_cast<std::size_t>(returns.last_day() - spec.length + 1));
    for (Eigen::Index day = spec.length; day <= returns.last_day(); ++day)
    {
        auto e = estimate(returns, day, spec, cols, weights);
        points.push_back({day, returns.date_of_day(day), e.mean(0), std::sqrt(std::max(0.0, e.cov(0, 0)))});
    }
    return points;
}

} // namespace mvport
