// mvport command-line driver. Talks to the library only through mvport.h.
//
// Exit status: 0 success, 1 data/config error, 2 numerical failure.

#include "mvport/mvport.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace
{

enum ExitCode
{
    kOk = 0,
    kDataError = 1,
    kNumericalError = 2,
};

int verbosity = 0;

template <class... Args>
void log(int level, const char* fmt, Args... args)
{
    if (verbosity < level)
        return;
    std::fputs("[mvport] ", stderr);
    if constexpr (sizeof...(Args) == 0)
        std::fputs(fmt, stderr);
    else
        std::fprintf(stderr, fmt, args...);
    std::fputc('\n', stderr);
}

struct Failure
{
    int code;
    std::string message;
};

void check(mvp_status status)
{
    if (status == MVP_OK)
        return;
    throw Failure{status == MVP_ERR_NUMERICAL ? kNumericalError : kDataError, mvp_last_error()};
}

[[noreturn]] void config_error(const std::string& message)
{
    throw Failure{kDataError, message};
}

struct PricesDeleter
{
    void operator()(mvp_prices* p) const { mvp_prices_free(p); }
};
struct ReturnsDeleter
{
    void operator()(mvp_returns* r) const { mvp_returns_free(r); }
};
struct SimulationDeleter
{
    void operator()(mvp_simulation* s) const { mvp_simulation_free(s); }
};
struct SweepDeleter
{
    void operator()(mvp_sweep* s) const { mvp_sweep_free(s); }
};
using Prices = std::unique_ptr<mvp_prices, PricesDeleter>;
using Returns = std::unique_ptr<mvp_returns, ReturnsDeleter>;
using Simulation = std::unique_ptr<mvp_simulation, SimulationDeleter>;
using Sweep = std::unique_ptr<mvp_sweep, SweepDeleter>;

struct Options
{
    std::string data;
    std::string index = "INDEX";
    std::vector<double> k{2.0};
    std::vector<int> obs{50};
    std::vector<int> hold{21};
    std::string window = "rect";
    double sigma = 0.0;
    double ridge = -1.0;
    std::string convention = "paper";
    std::uint64_t seed = 42;
    int jobs = 1;
    std::string out_dir = ".";
    std::vector<std::string> investable;
    bool include_index = false;
    bool verify_kkt = false;

    // synth
    std::size_t assets = 16;
    std::size_t days = 2000;
    double drift = 3e-4;
    double vol = 0.02;
    double corr = 0.3;
    std::string spec;
    std::string out;

    // solve-debug / rolling-stats
    std::string problem;
    std::string asset;
};

mvp_convention convention_of(const std::string& s)
{
    if (s == "paper")
        return MVP_CONVENTION_CURRENT_PRICE;
    if (s == "standard")
        return MVP_CONVENTION_STANDARD;
    config_error("--convention must be 'paper' or 'standard'");
}

mvp_window_shape shape_of(const std::string& s)
{
    if (s == "rect")
        return MVP_WINDOW_RECT;
    if (s == "halfgauss")
        return MVP_WINDOW_HALF_GAUSSIAN;
    config_error("--window must be 'rect' or 'halfgauss'");
}

fs::path out_path(const Options& o, const std::string& name)
{
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec)
        config_error("cannot create output directory '" + o.out_dir + "': " + ec.message());
    return fs::path(o.out_dir) / name;
}

std::string fmt_k(double k)
{
    std::ostringstream ss;
    ss << k;
    return ss.str();
}

Prices load(const Options& o)
{
    if (o.data.empty())
        config_error("--data is required");
    mvp_prices* raw = nullptr;
    check(mvp_prices_load(o.data.c_str(), o.index.c_str(), &raw));
    log(1, "loaded %zu rows x %zu columns from %s", mvp_prices_rows(raw), mvp_prices_assets(raw), o.data.c_str());
    return Prices(raw);
}

Returns returns_of(const mvp_prices* prices, const Options& o)
{
    mvp_returns* raw = nullptr;
    check(mvp_returns_compute(prices, convention_of(o.convention), &raw));
    return Returns(raw);
}

struct StrategyBase
{
    mvp_strategy_params params;
    std::vector<const char*> investable;
};

StrategyBase strategy_base(const Options& o)
{
    StrategyBase base;
    mvp_strategy_params_init(&base.params);
    base.params.shape = shape_of(o.window);
    base.params.sigma = o.sigma;
    base.params.ridge = o.ridge;
    base.params.include_index = o.include_index ? 1 : 0;
    base.params.convention = convention_of(o.convention);
    base.params.verify_kkt = o.verify_kkt ? 1 : 0;
    for (const auto& a : o.investable)
        base.investable.push_back(a.c_str());
    base.params.investable = base.investable.empty() ? nullptr : base.investable.data();
    base.params.investable_count = base.investable.size();
    return base;
}

int cmd_ingest(const Options& o)
{
    auto prices = load(o);
    const auto rows = mvp_prices_rows(prices.get());
    std::printf("%zu assets + index '%s', %s..%s, %zu rows\n", mvp_prices_assets(prices.get()) - 1,
                mvp_prices_index(prices.get()), mvp_prices_date(prices.get(), 0),
                mvp_prices_date(prices.get(), rows - 1), rows);
    return kOk;
}

int cmd_backtest(const Options& o)
{
    if (o.k.size() != 1 || o.obs.size() != 1 || o.hold.size() != 1)
        config_error("backtest takes exactly one --k, --obs and --hold value");
    auto prices = load(o);
    auto returns = returns_of(prices.get(), o);
    auto base = strategy_base(o);
    base.params.k = o.k[0];
    base.params.observation = o.obs[0];
    base.params.holding = o.hold[0];

    mvp_simulation* raw = nullptr;
    check(mvp_simulation_run(prices.get(), returns.get(), &base.params, &raw));
    Simulation sim(raw);
    mvp_simulation_summary s{};
    check(mvp_simulation_summarize(sim.get(), &s));

    const std::string stem = "k" + fmt_k(o.k[0]) + "_p" + std::to_string(o.obs[0]) + "_q" + std::to_string(o.hold[0]);
    const auto series = out_path(o, "run_" + stem + ".csv");
    const auto trades = out_path(o, "trades_" + stem + ".csv");
    check(mvp_simulation_write_series(sim.get(), series.string().c_str()));
    check(mvp_simulation_write_trades(sim.get(), trades.string().c_str()));
    log(1, "wrote %s and %s", series.string().c_str(), trades.string().c_str());

    std::printf("k: %s\np: %d\nq: %d\n", fmt_k(o.k[0]).c_str(), o.obs[0], o.hold[0]);
    std::printf("evaluated_days: %zu\ntrades: %zu\nskipped_index_down: %zu\nskipped_infeasible: %zu\n",
                s.evaluated_days, s.trades, s.skipped_index_down, s.skipped_infeasible);
    if (s.has_averages)
    {
        std::printf("real_avg: %.12g\nreference_avg: %.12g\n", s.real_avg, s.reference_avg);
        std::printf("real_avg_bp: %.2f\nreference_avg_bp: %.2f\n", s.real_avg * 1e4, s.reference_avg * 1e4);
        std::printf("min_daily: %.6g\nmax_daily: %.6g\n", s.min_daily, s.max_daily);
    }
    else
    {
        std::printf("real_avg: n/a\nreference_avg: n/a\n");
    }
    if (o.verify_kkt)
        std::printf("kkt_flags: %zu\n", s.kkt_flags);
    return kOk;
}

int cmd_sweep(const Options& o)
{
    auto prices = load(o);
    auto returns = returns_of(prices.get(), o);
    auto base = strategy_base(o);
    const mvp_sweep_grid grid{o.k.data(), o.k.size(), o.obs.data(), o.obs.size(), o.hold.data(), o.hold.size()};
    log(1, "sweeping %zu cells on %d job(s)", o.k.size() * o.obs.size() * o.hold.size(), o.jobs);

    mvp_sweep* raw = nullptr;
    check(mvp_sweep_run(prices.get(), returns.get(), &grid, &base.params, o.jobs, &raw));
    Sweep sweep(raw);
    const auto path = out_path(o, "sweep.csv");
    check(mvp_sweep_write_csv(sweep.get(), path.string().c_str()));

    std::size_t flags = 0;
    for (std::size_t i = 0; i < mvp_sweep_cell_count(sweep.get()); ++i)
    {
        mvp_sweep_cell cell{};
        check(mvp_sweep_cell_at(sweep.get(), i, &cell));
        flags += cell.kkt_flags;
        if (cell.status == MVP_CELL_NOT_EVALUABLE)
            std::printf("k=%s p=%d q=%d: not-evaluable\n", fmt_k(cell.k).c_str(), cell.observation, cell.holding);
        else if (cell.status == MVP_CELL_EMPTY)
            std::printf("k=%s p=%d q=%d: no trades\n", fmt_k(cell.k).c_str(), cell.observation, cell.holding);
        else
            log(1, "k=%s p=%d q=%d: trades=%zu real=%.4g ref=%.4g", fmt_k(cell.k).c_str(), cell.observation,
                cell.holding, cell.trades, cell.real_avg, cell.reference_avg);
    }
    for (double k : o.k)
    {
        int p = 0;
        int q = 0;
        double real = 0.0;
        double ref = 0.0;
        if (mvp_sweep_best_cell(sweep.get(), k, &p, &q, &real, &ref) == MVP_OK)
            std::printf("best k=%s: p=%d q=%d real_bp=%.2f reference_bp=%.2f\n", fmt_k(k).c_str(), p, q, real * 1e4,
                        ref * 1e4);
        else
            std::printf("best k=%s: none\n", fmt_k(k).c_str());
    }
    if (o.verify_kkt)
        std::printf("kkt_flags: %zu\n", flags);
    std::printf("table: %s\n", path.string().c_str());
    return kOk;
}

std::vector<double> json_vector(const nlohmann::json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_array())
        config_error(std::string("spec needs an array '") + key + "'");
    return j[key].get<std::vector<double>>();
}

std::vector<double> json_matrix(const nlohmann::json& j, const char* key, std::size_t d)
{
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != d)
        config_error(std::string("spec needs a ") + std::to_string(d) + "x" + std::to_string(d) + " array '" + key + "'");
    std::vector<double> flat;
    for (const auto& row : j[key])
    {
        auto r = row.get<std::vector<double>>();
        if (r.size() != d)
            config_error(std::string("row of '") + key + "' has the wrong length");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return flat;
}

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        config_error("cannot open '" + path + "'");
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        config_error(path + ": " + e.what());
    }
}

int cmd_synth(const Options& o, bool seed_given)
{
    Prices prices;
    std::uint64_t seed = o.seed;
    if (!o.spec.empty())
    {
        const auto j = read_json(o.spec);
        try
        {
            const auto d = j.at("assets").get<std::size_t>();
            const auto mean = json_vector(j, "mean");
            const auto cov = json_matrix(j, "cov", d);
            std::vector<double> initial;
            if (j.contains("initial_prices"))
                initial = json_vector(j, "initial_prices");
            if (!seed_given && j.contains("seed"))
                seed = j["seed"].get<std::uint64_t>();
            const std::string start = j.value("start_date", std::string("2001-01-02"));
            if (mean.size() != d || (!initial.empty() && initial.size() != d))
                config_error("spec vectors must have 'assets' entries");
            mvp_synth_spec spec{};
            spec.assets = d;
            spec.days = j.value("days", o.days);
            spec.mean = mean.data();
            spec.cov = cov.data();
            spec.initial_prices = initial.empty() ? nullptr : initial.data();
            spec.seed = seed;
            spec.explicit_index = j.value("explicit_index", false) ? 1 : 0;
            spec.start_date = start.c_str();
            mvp_prices* raw = nullptr;
            check(mvp_synth_generate(&spec, &raw));
            prices.reset(raw);
        }
        catch (const nlohmann::json::exception& e)
        {
            config_error(o.spec + ": " + e.what());
        }
    }
    else
    {
        mvp_prices* raw = nullptr;
        check(mvp_synth_generate_market(o.assets, o.days, seed, o.drift, o.vol, o.corr, &raw));
        prices.reset(raw);
    }
    const fs::path path = o.out.empty() ? out_path(o, "synthetic.csv") : fs::path(o.out);
    check(mvp_prices_save(prices.get(), path.string().c_str()));
    std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
    std::printf("wrote %s: %zu columns (index '%s'), %zu rows\n", path.string().c_str(),
                mvp_prices_assets(prices.get()), mvp_prices_index(prices.get()), mvp_prices_rows(prices.get()));
    return kOk;
}

int cmd_solve_debug(const Options& o)
{
    if (o.problem.empty())
        config_error("--problem is required");
    const auto j = read_json(o.problem);
    std::vector<double> r;
    std::vector<double> q;
    double r0 = 0.0;
    double ridge = o.ridge;
    try
    {
        r = json_vector(j, "r");
        q = json_matrix(j, "q", r.size());
        r0 = j.at("r0").get<double>();
        if (j.contains("ridge") && o.ridge < 0.0)
            ridge = j["ridge"].get<double>();
    }
    catch (const nlohmann::json::exception& e)
    {
        config_error(o.problem + ": " + e.what());
    }
    const mvp_qp_problem problem{r.size(), q.data(), r.data(), r0, ridge};
    std::vector<double> w(r.size(), 0.0);
    mvp_qp_result result{};
    check(mvp_qp_solve(&problem, w.data(), &result));
    if (result.status == MVP_QP_INFEASIBLE)
    {
        std::printf("status: infeasible\n");
        return kOk;
    }
    std::printf("status: optimal\nweights:");
    for (double v : w)
        std::printf(" %.10g", v);
    std::printf("\nobjective: %.10g\nkkt_residual: %.3e\nridge: %.3e\nworking_set_changes: %d\n", result.objective,
                result.kkt_residual, result.ridge_used, result.working_set_changes);
    std::printf("verified: %s (max gap %.3e)\n", result.kkt_flagged ? "FLAGGED" : "ok", result.kkt_max_gap);
    return kOk;
}

int cmd_rolling_stats(const Options& o)
{
    if (o.obs.size() != 1)
        config_error("rolling-stats takes exactly one --obs value");
    auto prices = load(o);
    auto returns = returns_of(prices.get(), o);
    const std::string asset = o.asset.empty() ? o.index : o.asset;
    const mvp_window window{o.obs[0], shape_of(o.window), o.sigma};
    const auto path = out_path(o, "rolling_" + asset + "_n" + std::to_string(o.obs[0]) + ".csv");
    std::size_t points = 0;
    check(mvp_rolling_stats_write(returns.get(), asset.c_str(), &window, path.string().c_str(), &points));
    std::printf("wrote %s: %zu points\n", path.string().c_str(), points);
    return kOk;
}

int cmd_scatter(const Options& o)
{
    auto prices = load(o);
    auto returns = returns_of(prices.get(), o);
    const auto path = out_path(o, "scatter.csv");
    check(mvp_scatter_write(returns.get(), path.string().c_str()));
    std::printf("wrote %s: %zu points\n", path.string().c_str(), mvp_prices_assets(prices.get()));
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sliding-window mean-variance portfolio backtests"};
    app.set_version_flag("--version", std::string(mvp_version()));
    app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
    app.require_subcommand(1);

    Options o;
    app.add_option("--data", o.data, "Price CSV (date column then one column per asset)");
    app.add_option("--index", o.index, "Market index column")->capture_default_str();
    app.add_option("--k", o.k, "Target multiple(s) of the index return")->capture_default_str();
    app.add_option("--obs", o.obs, "Observation window length(s) in days")->capture_default_str();
    app.add_option("--hold", o.hold, "Holding period length(s) in days")->capture_default_str();
    app.add_option("--window", o.window, "Window shape")
        ->check(CLI::IsMember({"rect", "halfgauss"}))
        ->capture_default_str();
    app.add_option("--sigma", o.sigma, "Half-Gaussian sigma in days (0: half the window)");
    app.add_option("--ridge", o.ridge, "Absolute ridge (negative: 1e-8 * trace/d)");
    app.add_option("--convention", o.convention, "Simple return divisor (paper: P_t, standard: P_{t-1})")
        ->check(CLI::IsMember({"paper", "standard"}))
        ->capture_default_str();
    auto* seed_opt = app.add_option("--seed", o.seed, "Seed for synthetic data")->capture_default_str();
    app.add_option("--jobs", o.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out-dir", o.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--investable", o.investable, "Investable assets (default: all but the index)");
    app.add_flag("--include-index", o.include_index, "Let the optimizer buy the index column");
    app.add_flag("--verify-kkt", o.verify_kkt, "Re-verify every solution and report KKT flags");
    app.add_flag("-v,--verbose", verbosity, "Log to stderr; repeat for more");
    app.add_option("--assets", o.assets, "synth: number of assets")->capture_default_str();
    app.add_option("--days", o.days, "synth: number of trading days")->capture_default_str();
    app.add_option("--drift", o.drift, "synth: mean daily log return")->capture_default_str();
    app.add_option("--vol", o.vol, "synth: daily volatility")->capture_default_str();
    app.add_option("--corr", o.corr, "synth: pairwise correlation")->capture_default_str();
    app.add_option("--spec", o.spec, "synth: JSON spec with assets, days, mean, cov, seed");
    app.add_option("--out", o.out, "synth: output file (default <out-dir>/synthetic.csv)");
    app.add_option("--problem", o.problem, "solve-debug: JSON problem {q, r, r0, ridge}");
    app.add_option("--asset", o.asset, "rolling-stats: column (default: the index)");

    auto* ingest = app.add_subcommand("ingest", "Validate a price file and summarize it");
    auto* backtest = app.add_subcommand("backtest", "Run one (k, obs, hold) simulation");
    auto* sweep = app.add_subcommand("sweep", "Run the simulation over a k x obs x hold grid");
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic price file");
    auto* solve_debug = app.add_subcommand("solve-debug", "Solve one QP from a JSON file");
    auto* rolling = app.add_subcommand("rolling-stats", "Rolling mean/std of one column");
    auto* scatter = app.add_subcommand("scatter", "Full-history mean/std of every column");
    for (auto* sub : {ingest, backtest, sweep, synth, solve_debug, rolling, scatter})
        sub->fallthrough();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return kDataError;
    }

    try
    {
        if (*ingest)
            return cmd_ingest(o);
        if (*backtest)
            return cmd_backtest(o);
        if (*sweep)
            return cmd_sweep(o);
        if (*synth)
            return cmd_synth(o, seed_opt->count() > 0);
        if (*solve_debug)
            return cmd_solve_debug(o);
        if (*rolling)
            return cmd_rolling_stats(o);
        if (*scatter)
            return cmd_scatter(o);
    }
    catch (const Failure& f)
    {
        std::fprintf(stderr, "mvport: %s\n", f.message.c_str());
        return f.code;
    }
    return kDataError;
}
