#include "mvport/synthetic.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>

namespace mvport
{

void SynthSpec::validate() const
{
    const auto d = static_cast<Eigen::Index>(assets);
    if (assets < 1)
        throw DataError("synthetic spec needs at least one asset");
    if (days < 2)
        throw DataError("synthetic spec needs at least two days");
    if (mean.size() != d || cov.rows() != d || cov.cols() != d || initial_prices.size() != d)
        throw DataError(fmt::format("synthetic spec dimensions disagree with {} assets", assets));
    if (!mean.allFinite() || !cov.allFinite() || !initial_prices.allFinite())
        throw DataError("synthetic spec must be finite");
    if ((initial_prices.array() <= 0.0).any())
        throw DataError("initial prices must be positive");
    if ((cov - cov.transpose()).lpNorm<Eigen::Infinity>() > 1e-14 * std::max(1.0, cov.lpNorm<Eigen::Infinity>()))
        throw DataError("synthetic covariance is not symmetric");
    if (!is_iso_date(start_date))
        throw DataError(fmt::format("start date '{}' is not yyyy-mm-dd", start_date));
    if (index_rule == IndexRule::equal_weight_of_assets && index_name.empty())
        throw DataError("index name is empty");
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& cov)
{
    const Eigen::Index d = cov.rows();
    if (cov.cols() != d)
        throw DataError("covariance must be square");
    const double scale = d > 0 ? cov.diagonal().cwiseAbs().maxCoeff() : 0.0;
    const double tol = 1e-12 * std::max(scale, 1e-300);
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
    {
        double pivot = cov(j, j);
        for (Eigen::Index k = 0; k < j; ++k)
            pivot -= l(j, k) * l(j, k);
        if (pivot < -tol)
            throw DataError(fmt::format("covariance is not positive semidefinite (pivot {} at {})", pivot, j));
        if (pivot <= tol)
        {
            // Degenerate direction: the rest of the column must vanish too.
            for (Eigen::Index i = j + 1; i < d; ++i)
            {
                double v = cov(i, j);
                for (Eigen::Index k = 0; k < j; ++k)
                    v -= l(i, k) * l(j, k);
                if (std::abs(v) > std::sqrt(tol) * std::sqrt(std::max(cov(i, i), 0.0)) + tol)
                    throw DataError(fmt::format("covariance is not positive semidefinite (column {})", j));
            }
            continue;
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < d; ++i)
        {
            double v = cov(i, j);
            for (Eigen::Index k = 0; k < j; ++k)
                v -= l(i, k) * l(j, k);
            l(i, j) = v / ljj;
        }
    }
    return l;
}

double NormalSampler::uniform_pm1()
{
    // 53 random bits mapped onto [-1, 1).
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

double NormalSampler::operator()()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do
    {
        u = uniform_pm1();
        v = uniform_pm1();
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

std::vector<std::string> business_days(const std::string& start, std::size_t count)
{
    if (!is_iso_date(start))
        throw DataError(fmt::format("'{}' is not yyyy-mm-dd", start));
    using namespace std::chrono;
    const int y = std::stoi(start.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    const unsigned dd = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    sys_days day{year{y} / month{m} / std::chrono::day{dd}};
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count)
    {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday)
        {
            const year_month_day ymd{day};
            out.push_back(fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())));
        }
        day += days{1};
    }
    return out;
}

SynthData generate(const SynthSpec& spec)
{
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.assets);
    const auto rows = static_cast<Eigen::Index>(spec.days);
    const Eigen::MatrixXd l = cholesky_lower(spec.cov);

    NormalSampler normal(spec.seed);
    Eigen::MatrixXd log_returns(rows - 1, d);
    Eigen::VectorXd z(d);
    for (Eigen::Index t = 0; t < rows - 1; ++t)
    {
        for (Eigen::Index j = 0; j < d; ++j)
            z(j) = normal();
        for (Eigen::Index i = 0; i < d; ++i)
        {
            double x = spec.mean(i);
            for (Eigen::Index k = 0; k <= i; ++k)
                x += l(i, k) * z(k);
            log_returns(t, i) = x;
        }
    }

    const bool extra_index = spec.index_rule == IndexRule::equal_weight_of_assets;
    const Eigen::Index cols = d + (extra_index ? 1 : 0);
    Eigen::MatrixXd prices(rows, cols);
    for (Eigen::Index j = 0; j < d; ++j)
    {
        prices(0, j) = spec.initial_prices(j);
        for (Eigen::Index t = 1; t < rows; ++t)
            prices(t, j) = prices(t - 1, j) * std::exp(log_returns(t - 1, j));
    }

    std::vector<std::string> names;
    const int width = std::max(2, static_cast<int>(std::to_string(spec.assets).size()));
    for (Eigen::Index j = 0; j < d; ++j)
        names.push_back(fmt::format("A{:0{}d}", j + 1, width));
    std::string index_name;
    if (extra_index)
    {
        for (Eigen::Index t = 0; t < rows; ++t)
        {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < d; ++j)
                sum += prices(t, j);
            prices(t, d) = sum / static_cast<double>(d);
        }
        names.push_back(spec.index_name);
        index_name = spec.index_name;
    }
    else
    {
        if (!spec.index_name.empty())
            names.back() = spec.index_name;
        index_name = names.back();
    }

    PriceTable table(business_days(spec.start_date, spec.days), std::move(names), std::move(prices),
                     std::move(index_name));
    return SynthData{std::move(table), std::move(log_returns)};
}

SynthSpec make_market_spec(std::size_t assets,
                           std::size_t days,
                           std::uint64_t seed,
                           double drift,
                           double vol,
                           double correlation)
{
    if (assets < 1)
        throw DataError("synthetic spec needs at least one asset");
    if (assets > 1 && !(correlation > -1.0 / (static_cast<double>(assets) - 1.0) && correlation <= 1.0))
        throw DataError(fmt::format("correlation {} does not give a valid covariance for {} assets", correlation,
                                    assets));
    if (!(vol >= 0.0))
        throw DataError("volatility must be nonnegative");
    const auto d = static_cast<Eigen::Index>(assets);
    SynthSpec spec;
    spec.assets = assets;
    spec.days = days;
    spec.seed = seed;
    spec.mean.resize(d);
    Eigen::VectorXd sd(d);
    for (Eigen::Index j = 0; j < d; ++j)
    {
        const double frac = d > 1 ? static_cast<double>(j) / static_cast<double>(d - 1) : 0.5;
        spec.mean(j) = drift * (0.5 + frac);
        sd(j) = vol * (0.6 + 0.8 * frac);
    }
    spec.cov.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            spec.cov(i, j) = (i == j ? 1.0 : correlation) * sd(i) * sd(j);
    spec.initial_prices = Eigen::VectorXd::Constant(d, 100.0);
    return spec;
}

} // namespace mvport
