/*
 * mvport C interface.
 *
 * Opaque handles own C++ objects; every *_free accepts NULL. Functions
 * return an mvp_status; on failure mvp_last_error() describes the problem
 * for the calling thread until its next mvport call. Output pointers are
 * only written on MVP_OK.
 */

#ifndef MVPORT_H
#define MVPORT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MVPORT_BUILDING_LIBRARY)
#    define MVP_API __declspec(dllexport)
#  else
#    define MVP_API __declspec(dllimport)
#  endif
#else
#  define MVP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvp_status
{
    MVP_OK = 0,
    MVP_ERR_DATA = 1,      /* invalid data or configuration */
    MVP_ERR_NUMERICAL = 2, /* solver or factorization failure */
    MVP_ERR_IO = 3,
    MVP_ERR_ARGUMENT = 4,  /* NULL handle, bad enum, short buffer */
    MVP_ERR_INTERNAL = 5
} mvp_status;

typedef enum mvp_convention
{
    MVP_CONVENTION_CURRENT_PRICE = 0, /* (P_t - P_{t-1}) / P_t */
    MVP_CONVENTION_STANDARD = 1       /* (P_t - P_{t-1}) / P_{t-1} */
} mvp_convention;

typedef enum mvp_window_shape
{
    MVP_WINDOW_RECT = 0,
    MVP_WINDOW_HALF_GAUSSIAN = 1
} mvp_window_shape;

typedef enum mvp_qp_status
{
    MVP_QP_OPTIMAL = 0,
    MVP_QP_INFEASIBLE = 1
} mvp_qp_status;

typedef enum mvp_cell_status
{
    MVP_CELL_OK = 0,
    MVP_CELL_EMPTY = 1,
    MVP_CELL_NOT_EVALUABLE = 2
} mvp_cell_status;

typedef struct mvp_prices mvp_prices;
typedef struct mvp_returns mvp_returns;
typedef struct mvp_simulation mvp_simulation;
typedef struct mvp_sweep mvp_sweep;

MVP_API const char* mvp_version(void);
MVP_API const char* mvp_last_error(void);

/* ---- market data ---- */

MVP_API mvp_status mvp_prices_load(const char* path, const char* index_id, mvp_prices** out);
MVP_API mvp_status mvp_prices_save(const mvp_prices* prices, const char* path);
MVP_API void mvp_prices_free(mvp_prices* prices);
MVP_API size_t mvp_prices_rows(const mvp_prices* prices);
MVP_API size_t mvp_prices_assets(const mvp_prices* prices);
/* Returned strings live as long as the handle. */
MVP_API const char* mvp_prices_asset(const mvp_prices* prices, size_t column);
MVP_API const char* mvp_prices_date(const mvp_prices* prices, size_t row);
MVP_API const char* mvp_prices_index(const mvp_prices* prices);
MVP_API double mvp_prices_value(const mvp_prices* prices, size_t row, size_t column);

MVP_API mvp_status mvp_returns_compute(const mvp_prices* prices, mvp_convention convention, mvp_returns** out);
MVP_API void mvp_returns_free(mvp_returns* returns);
MVP_API size_t mvp_returns_rows(const mvp_returns* returns);
/* Log return of `column` on calendar day `day` (1-based; day 0 has no return). */
MVP_API mvp_status mvp_returns_log(const mvp_returns* returns, size_t day, size_t column, double* out);

/* ---- estimation and reports ---- */

typedef struct mvp_window
{
    int length;
    mvp_window_shape shape;
    double sigma; /* <= 0 selects length / 2 */
} mvp_window;

/* Writes `day,date,mean,std`; *points receives the number of rows (may be NULL). */
MVP_API mvp_status mvp_rolling_stats_write(const mvp_returns* returns,
                                           const char* asset,
                                           const mvp_window* window,
                                           const char* path,
                                           size_t* points);
MVP_API mvp_status mvp_scatter_write(const mvp_returns* returns, const char* path);

/* ---- quadratic program ---- */

typedef struct mvp_qp_problem
{
    size_t dim;
    const double* q; /* dim x dim, row-major */
    const double* r; /* dim */
    double r0;
    double ridge; /* >= 0; negative selects the relative default */
} mvp_qp_problem;

typedef struct mvp_qp_result
{
    mvp_qp_status status;
    double objective;
    double kkt_residual;
    int working_set_changes;
    double ridge_used;
    int kkt_flagged;     /* independent re-verification */
    double kkt_max_gap;
} mvp_qp_result;

MVP_API int mvp_is_feasible(const double* r, size_t dim, double r0);
/* weights must hold dim doubles; untouched when infeasible. */
MVP_API mvp_status mvp_qp_solve(const mvp_qp_problem* problem, double* weights, mvp_qp_result* result);

/* ---- strategy ---- */

typedef struct mvp_strategy_params
{
    int observation;
    int holding;
    double k;
    mvp_window_shape shape;
    double sigma;              /* <= 0 selects observation / 2 */
    double ridge;              /* negative selects the relative default */
    int include_index;
    const char* const* investable; /* NULL or `investable_count` identifiers */
    size_t investable_count;
    mvp_convention convention; /* recorded in outputs */
    int verify_kkt;
} mvp_strategy_params;

MVP_API void mvp_strategy_params_init(mvp_strategy_params* params);

typedef struct mvp_simulation_summary
{
    size_t evaluated_days;
    size_t trades;
    size_t skipped_index_down;
    size_t skipped_infeasible;
    size_t kkt_flags;
    int has_averages; /* 0 when no trade happened */
    double real_avg;
    double reference_avg;
    double min_daily;
    double max_daily;
} mvp_simulation_summary;

MVP_API mvp_status mvp_simulation_run(const mvp_prices* prices,
                                      const mvp_returns* returns,
                                      const mvp_strategy_params* params,
                                      mvp_simulation** out);
MVP_API void mvp_simulation_free(mvp_simulation* sim);
MVP_API mvp_status mvp_simulation_summarize(const mvp_simulation* sim, mvp_simulation_summary* out);
MVP_API mvp_status mvp_simulation_write_series(const mvp_simulation* sim, const char* path);
MVP_API mvp_status mvp_simulation_write_trades(const mvp_simulation* sim, const char* path);

/* ---- sweep ---- */

typedef struct mvp_sweep_grid
{
    const double* k_values;
    size_t k_count;
    const int* observation;
    size_t observation_count;
    const int* holding;
    size_t holding_count;
} mvp_sweep_grid;

typedef struct mvp_sweep_cell
{
    double k;
    int observation;
    int holding;
    mvp_cell_status status;
    double reference_avg; /* valid when status == MVP_CELL_OK */
    double real_avg;
    size_t trades;
    size_t skipped_index_down;
    size_t skipped_infeasible;
    size_t kkt_flags;
} mvp_sweep_cell;

/* `base` supplies shape, sigma, ridge, investable set, convention and
 * verify_kkt; its observation/holding/k fields are ignored. */
MVP_API mvp_status mvp_sweep_run(const mvp_prices* prices,
                                 const mvp_returns* returns,
                                 const mvp_sweep_grid* grid,
                                 const mvp_strategy_params* base,
                                 int jobs,
                                 mvp_sweep** out);
MVP_API void mvp_sweep_free(mvp_sweep* sweep);
MVP_API size_t mvp_sweep_cell_count(const mvp_sweep* sweep);
MVP_API mvp_status mvp_sweep_cell_at(const mvp_sweep* sweep, size_t i, mvp_sweep_cell* out);
MVP_API mvp_status mvp_sweep_write_csv(const mvp_sweep* sweep, const char* path);
MVP_API mvp_status mvp_sweep_best_cell(const mvp_sweep* sweep, double k, int* observation, int* holding,
                                       double* real_avg, double* reference_avg);
MVP_API uint64_t mvp_sweep_fingerprint(const mvp_sweep* sweep);

/* ---- synthetic data ---- */

typedef struct mvp_synth_spec
{
    size_t assets;
    size_t days;                  /* price rows */
    const double* mean;           /* assets */
    const double* cov;            /* assets x assets, row-major */
    const double* initial_prices; /* assets; NULL means 100 each */
    uint64_t seed;
    int explicit_index;           /* 1: last column is the index */
    const char* start_date;       /* NULL means 2001-01-02 */
} mvp_synth_spec;

MVP_API mvp_status mvp_synth_generate(const mvp_synth_spec* spec, mvp_prices** out);
/* Market-like defaults: spread drifts/vols, constant correlation. */
MVP_API mvp_status mvp_synth_generate_market(size_t assets,
                                             size_t days,
                                             uint64_t seed,
                                             double drift,
                                             double vol,
                                             double correlation,
                                             mvp_prices** out);

#ifdef __cplusplus
}
#endif

#endif /* MVPORT_H */
