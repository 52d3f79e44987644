#include "mvport/mvport.h"

#include "mvport/errors.hpp"
#include "mvport/estimator.hpp"
#include "mvport/market_data.hpp"
#include "mvport/qp.hpp"
#include "mvport/report.hpp"
#include "mvport/strategy.hpp"
#include "mvport/sweep.hpp"
#include "mvport/synthetic.hpp"

#include <algorithm>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

struct mvp_prices
{
    mvport::PriceTable table;
};

struct mvp_returns
{
    mvport::ReturnTable table;
};

struct mvp_simulation
{
    mvport::SimulationResult result;
};

struct mvp_sweep
{
    mvport::SweepTable table;
};

namespace
{

thread_local std::string last_error;

struct BadArgument : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

mvp_status fail(mvp_status status, const char* message)
{
    last_error = message;
    return status;
}

template <class Fn>
mvp_status checked(Fn&& fn) noexcept
{
    try
    {
        last_error.clear();
        fn();
        return MVP_OK;
    }
    catch (const mvport::NumericalError& e)
    {
        return fail(MVP_ERR_NUMERICAL, e.what());
    }
    catch (const mvport::IoError& e)
    {
        return fail(MVP_ERR_IO, e.what());
    }
    catch (const mvport::DataError& e)
    {
        return fail(MVP_ERR_DATA, e.what());
    }
    catch (const BadArgument& e)
    {
        return fail(MVP_ERR_ARGUMENT, e.what());
    }
    catch (const std::bad_alloc&)
    {
        return fail(MVP_ERR_INTERNAL, "out of memory");
    }
    catch (const std::exception& e)
    {
        return fail(MVP_ERR_INTERNAL, e.what());
    }
    catch (...)
    {
        return fail(MVP_ERR_INTERNAL, "unknown error");
    }
}

void require(bool condition, const char* message)
{
    if (!condition)
        throw mvport::DataError(message);
}

mvport::ReturnConvention convention_of(mvp_convention c)
{
    switch (c)
    {
    case MVP_CONVENTION_CURRENT_PRICE:
        return mvport::ReturnConvention::current_price;
    case MVP_CONVENTION_STANDARD:
        return mvport::ReturnConvention::standard;
    }
    throw BadArgument("unknown return convention");
}

mvport::WindowShape shape_of(mvp_window_shape s)
{
    switch (s)
    {
    case MVP_WINDOW_RECT:
        return mvport::WindowShape::rectangular;
    case MVP_WINDOW_HALF_GAUSSIAN:
        return mvport::WindowShape::half_gaussian;
    }
    throw BadArgument("unknown window shape");
}

std::optional<double> sigma_of(double sigma)
{
    return sigma > 0.0 ? std::optional<double>(sigma) : std::nullopt;
}

mvport::StrategyParams strategy_of(const mvp_strategy_params& in)
{
    mvport::StrategyParams p;
    p.observation_p = in.observation;
    p.holding_q = in.holding;
    p.multiple_k = in.k;
    p.window = mvport::WindowSpec{in.observation, shape_of(in.shape), sigma_of(in.sigma)};
    p.include_index = in.include_index != 0;
    if (in.investable_count > 0)
    {
        require(in.investable != nullptr, "investable list is NULL");
        for (size_t i = 0; i < in.investable_count; ++i)
        {
            require(in.investable[i] != nullptr, "investable identifier is NULL");
            p.investable.emplace_back(in.investable[i]);
        }
    }
    p.convention = convention_of(in.convention);
    if (in.ridge >= 0.0)
        p.ridge = in.ridge;
    p.verify_kkt = in.verify_kkt != 0;
    return p;
}

} // namespace

extern "C" {

const char* mvp_version(void)
{
    return MVPORT_VERSION;
}

const char* mvp_last_error(void)
{
    return last_error.c_str();
}

mvp_status mvp_prices_load(const char* path, const char* index_id, mvp_prices** out)
{
    if (!path || !index_id || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { *out = new mvp_prices{mvport::load_prices(path, index_id)}; });
}

mvp_status mvp_prices_save(const mvp_prices* prices, const char* path)
{
    if (!prices || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { mvport::save_prices(path, prices->table); });
}

void mvp_prices_free(mvp_prices* prices)
{
    delete prices;
}

size_t mvp_prices_rows(const mvp_prices* prices)
{
    return prices ? static_cast<size_t>(prices->table.rows()) : 0;
}

size_t mvp_prices_assets(const mvp_prices* prices)
{
    return prices ? static_cast<size_t>(prices->table.cols()) : 0;
}

const char* mvp_prices_asset(const mvp_prices* prices, size_t column)
{
    if (!prices || column >= prices->table.assets().size())
        return nullptr;
    return prices->table.assets()[column].c_str();
}

const char* mvp_prices_date(const mvp_prices* prices, size_t row)
{
    if (!prices || row >= prices->table.dates().size())
        return nullptr;
    return prices->table.dates()[row].c_str();
}

const char* mvp_prices_index(const mvp_prices* prices)
{
    return prices ? prices->table.index_column().c_str() : nullptr;
}

double mvp_prices_value(const mvp_prices* prices, size_t row, size_t column)
{
    if (!prices || row >= static_cast<size_t>(prices->table.rows()) || column >= static_cast<size_t>(prices->table.cols()))
        return 0.0;
    return prices->table.price(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(column));
}

mvp_status mvp_returns_compute(const mvp_prices* prices, mvp_convention convention, mvp_returns** out)
{
    if (!prices || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { *out = new mvp_returns{mvport::compute_returns(prices->table, convention_of(convention))}; });
}

void mvp_returns_free(mvp_returns* returns)
{
    delete returns;
}

size_t mvp_returns_rows(const mvp_returns* returns)
{
    return returns ? static_cast<size_t>(returns->table.rows()) : 0;
}

mvp_status mvp_returns_log(const mvp_returns* returns, size_t day, size_t column, double* out)
{
    if (!returns || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    if (day < 1 || day > static_cast<size_t>(returns->table.last_day()) ||
        column >= static_cast<size_t>(returns->table.cols()))
        return fail(MVP_ERR_ARGUMENT, "day or column out of range");
    *out = returns->table.log_return(static_cast<Eigen::Index>(day), static_cast<Eigen::Index>(column));
    return MVP_OK;
}

mvp_status mvp_rolling_stats_write(const mvp_returns* returns,
                                   const char* asset,
                                   const mvp_window* window,
                                   const char* path,
                                   size_t* points)
{
    if (!returns || !asset || !window || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] {
        const mvport::WindowSpec spec{window->length, shape_of(window->shape), sigma_of(window->sigma)};
        const auto series = mvport::rolling_stats(returns->table, asset, spec);
        mvport::emit_rolling_csv(series, path);
        if (points)
            *points = series.size();
    });
}

mvp_status mvp_scatter_write(const mvp_returns* returns, const char* path)
{
    if (!returns || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { mvport::emit_scatter_csv(mvport::risk_return_scatter(returns->table), path); });
}

int mvp_is_feasible(const double* r, size_t dim, double r0)
{
    if (!r || dim == 0)
        return 0;
    return std::any_of(r, r + dim, [r0](double v) { return v >= r0; }) ? 1 : 0;
}

mvp_status mvp_qp_solve(const mvp_qp_problem* problem, double* weights, mvp_qp_result* result)
{
    if (!problem || !weights || !result || !problem->q || !problem->r)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] {
        require(problem->dim > 0, "problem has no assets");
        const auto d = static_cast<Eigen::Index>(problem->dim);
        mvport::QpProblem qp;
        qp.q = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(problem->q, d, d);
        qp.r = Eigen::Map<const Eigen::VectorXd>(problem->r, d);
        qp.r0 = problem->r0;
        qp.ridge = problem->ridge >= 0.0 ? problem->ridge : mvport::default_ridge(qp.q);
        const auto sol = mvport::solve(qp);
        mvp_qp_result out{};
        out.status = sol.status == mvport::QpStatus::optimal ? MVP_QP_OPTIMAL : MVP_QP_INFEASIBLE;
        out.objective = sol.objective;
        out.kkt_residual = sol.kkt_residual;
        out.working_set_changes = sol.working_set_changes;
        out.ridge_used = sol.ridge_used;
        if (sol.status == mvport::QpStatus::optimal)
        {
            const auto report = mvport::verify_kkt(qp, sol);
            out.kkt_flagged = report.flagged ? 1 : 0;
            out.kkt_max_gap = report.max_gap();
            std::copy(sol.weights.data(), sol.weights.data() + d, weights);
        }
        *result = out;
    });
}

void mvp_strategy_params_init(mvp_strategy_params* params)
{
    if (!params)
        return;
    *params = mvp_strategy_params{};
    params->observation = 50;
    params->holding = 21;
    params->k = 2.0;
    params->shape = MVP_WINDOW_RECT;
    params->sigma = 0.0;
    params->ridge = -1.0;
    params->include_index = 0;
    params->investable = nullptr;
    params->investable_count = 0;
    params->convention = MVP_CONVENTION_CURRENT_PRICE;
    params->verify_kkt = 0;
}

mvp_status mvp_simulation_run(const mvp_prices* prices,
                              const mvp_returns* returns,
                              const mvp_strategy_params* params,
                              mvp_simulation** out)
{
    if (!prices || !returns || !params || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] {
        *out = new mvp_simulation{mvport::run_simulation(prices->table, returns->table, strategy_of(*params))};
    });
}

void mvp_simulation_free(mvp_simulation* sim)
{
    delete sim;
}

mvp_status mvp_simulation_summarize(const mvp_simulation* sim, mvp_simulation_summary* out)
{
    if (!sim || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    const auto& r = sim->result;
    mvp_simulation_summary s{};
    s.evaluated_days = r.evaluated_days();
    s.trades = r.trade_count;
    s.skipped_index_down = r.skipped_index_down;
    s.skipped_infeasible = r.skipped_infeasible;
    s.kkt_flags = r.kkt_flags;
    s.has_averages = r.real_avg ? 1 : 0;
    s.real_avg = r.real_avg.value_or(0.0);
    s.reference_avg = r.reference_avg.value_or(0.0);
    bool first = true;
    for (const auto& t : r.trades)
    {
        if (t.decision != mvport::Decision::traded)
            continue;
        s.min_daily = first ? t.daily_avg_return : std::min(s.min_daily, t.daily_avg_return);
        s.max_daily = first ? t.daily_avg_return : std::max(s.max_daily, t.daily_avg_return);
        first = false;
    }
    *out = s;
    return MVP_OK;
}

mvp_status mvp_simulation_write_series(const mvp_simulation* sim, const char* path)
{
    if (!sim || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { mvport::emit_run_series(sim->result, path); });
}

mvp_status mvp_simulation_write_trades(const mvp_simulation* sim, const char* path)
{
    if (!sim || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { mvport::emit_trade_log(sim->result, path); });
}

mvp_status mvp_sweep_run(const mvp_prices* prices,
                         const mvp_returns* returns,
                         const mvp_sweep_grid* grid,
                         const mvp_strategy_params* base,
                         int jobs,
                         mvp_sweep** out)
{
    if (!prices || !returns || !grid || !base || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    if ((grid->k_count && !grid->k_values) || (grid->observation_count && !grid->observation) ||
        (grid->holding_count && !grid->holding))
        return fail(MVP_ERR_ARGUMENT, "NULL grid list");
    return checked([&] {
        mvport::SweepGrid g;
        g.k_values.assign(grid->k_values, grid->k_values + grid->k_count);
        g.observation_lengths.assign(grid->observation, grid->observation + grid->observation_count);
        g.holding_lengths.assign(grid->holding, grid->holding + grid->holding_count);
        g.window_shape = shape_of(base->shape);
        g.sigma = sigma_of(base->sigma);
        mvp_strategy_params tmpl = *base;
        tmpl.observation = 2;
        tmpl.holding = 1;
        tmpl.k = 1.0;
        g.base = strategy_of(tmpl);
        *out = new mvp_sweep{mvport::run_sweep(prices->table, returns->table, g, jobs)};
    });
}

void mvp_sweep_free(mvp_sweep* sweep)
{
    delete sweep;
}

size_t mvp_sweep_cell_count(const mvp_sweep* sweep)
{
    return sweep ? sweep->table.cells.size() : 0;
}

mvp_status mvp_sweep_cell_at(const mvp_sweep* sweep, size_t i, mvp_sweep_cell* out)
{
    if (!sweep || !out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    if (i >= sweep->table.cells.size())
        return fail(MVP_ERR_ARGUMENT, "cell index out of range");
    const auto& c = sweep->table.cells[i];
    mvp_sweep_cell cell{};
    cell.k = c.k;
    cell.observation = c.p;
    cell.holding = c.q;
    cell.status = c.status == mvport::CellStatus::ok      ? MVP_CELL_OK
                  : c.status == mvport::CellStatus::empty ? MVP_CELL_EMPTY
                                                          : MVP_CELL_NOT_EVALUABLE;
    cell.reference_avg = c.reference_avg.value_or(0.0);
    cell.real_avg = c.real_avg.value_or(0.0);
    cell.trades = c.trade_count;
    cell.skipped_index_down = c.skipped_index_down;
    cell.skipped_infeasible = c.skipped_infeasible;
    cell.kkt_flags = c.kkt_flags;
    *out = cell;
    return MVP_OK;
}

mvp_status mvp_sweep_write_csv(const mvp_sweep* sweep, const char* path)
{
    if (!sweep || !path)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] { mvport::emit_sweep_csv(sweep->table, path); });
}

mvp_status mvp_sweep_best_cell(const mvp_sweep* sweep, double k, int* observation, int* holding, double* real_avg,
                               double* reference_avg)
{
    if (!sweep || !observation || !holding)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] {
        const auto best = mvport::best_cell(sweep->table, k);
        *observation = best.p;
        *holding = best.q;
        if (real_avg)
            *real_avg = best.real_avg;
        if (reference_avg)
            *reference_avg = best.reference_avg;
    });
}

uint64_t mvp_sweep_fingerprint(const mvp_sweep* sweep)
{
    return sweep ? sweep->table.metadata.data_fingerprint : 0;
}

mvp_status mvp_synth_generate(const mvp_synth_spec* spec, mvp_prices** out)
{
    if (!spec || !out || !spec->mean || !spec->cov || spec->assets == 0)
        return fail(MVP_ERR_ARGUMENT, "NULL argument or zero assets");
    return checked([&] {
        const auto d = static_cast<Eigen::Index>(spec->assets);
        mvport::SynthSpec s;
        s.assets = spec->assets;
        s.days = spec->days;
        s.mean = Eigen::Map<const Eigen::VectorXd>(spec->mean, d);
        s.cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(spec->cov, d, d);
        s.initial_prices = spec->initial_prices ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(spec->initial_prices, d))
                                                : Eigen::VectorXd::Constant(d, 100.0);
        s.seed = spec->seed;
        s.index_rule = spec->explicit_index ? mvport::IndexRule::explicit_column
                                            : mvport::IndexRule::equal_weight_of_assets;
        if (spec->start_date)
            s.start_date = spec->start_date;
        *out = new mvp_prices{mvport::generate(s).prices};
    });
}

mvp_status mvp_synth_generate_market(size_t assets,
                                     size_t days,
                                     uint64_t seed,
                                     double drift,
                                     double vol,
                                     double correlation,
                                     mvp_prices** out)
{
    if (!out)
        return fail(MVP_ERR_ARGUMENT, "NULL argument");
    return checked([&] {
        *out = new mvp_prices{mvport::generate(mvport::make_market_spec(assets, days, seed, drift, vol, correlation)).prices};
    });
}

} // extern "C"
