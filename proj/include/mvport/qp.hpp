/**
 * @file qp.hpp
 * @brief Long-only minimum-variance portfolio with a target-return floor.
 *
 * Solves
 *
 *     minimize    1/2 w' (Q + ridge I) w
 *     subject to  sum(w) = 1,  w >= 0,  R'w >= R0
 *
 * with a primal active-set method started at the best-return vertex.
 * Inequality constraints are numbered 0..d-1 for the bounds w_j >= 0 and d
 * for the return floor; PortfolioSolution::active_set uses that numbering.
 */

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mvport
{

struct QpProblem
{
    Eigen::MatrixXd q;
    Eigen::VectorXd r;
    double r0 = 0.0;
    double ridge = 0.0;

    Eigen::Index dim() const noexcept { return r.size(); }
    /// Throws DataError on shape mismatch, asymmetry above 1e-14, negative ridge or non-finite entries.
    void validate() const;
};

struct QpOptions
{
    double feasibility_tol = 1e-10;
    double multiplier_tol = 1e-10;
    double kkt_tol = 1e-8;
    /// Cap on working-set changes, as a multiple of the dimension.
    int max_changes_per_dim = 100;
};

enum class QpStatus
{
    optimal,
    infeasible,
};

struct PortfolioSolution
{
    QpStatus status = QpStatus::infeasible;
    Eigen::VectorXd weights; ///< empty unless optimal
    double objective = 0.0;  ///< 1/2 w'Qw, without the ridge
    std::vector<int> active_set;
    double kkt_residual = 0.0;
    int working_set_changes = 0;
    /// Ridge actually used; larger than the problem's only after escalation.
    double ridge_used = 0.0;
};

/// Exact on the simplex: the best attainable R'w is max_j R_j.
bool is_feasible(const Eigen::VectorXd& r, double r0);

/// Default relative ridge: 1e-8 * trace(Q) / d, or 1e-12 when the trace is zero.
double default_ridge(const Eigen::MatrixXd& q);

Eigen::MatrixXd regularize(const Eigen::MatrixXd& q, double ridge);

/// Throws NumericalError when the working-set cap is hit or the KKT
/// subsystems stay singular after ridge escalation.
PortfolioSolution solve(const QpProblem& problem, const QpOptions& options = {});

struct KktReport
{
    double stationarity = 0.0;      ///< ||(Q+ridge I)w - lambda R - mu 1 - s||_inf
    double primal_violation = 0.0;  ///< worst of -w_j, |sum w - 1|, R0 - R'w
    double dual_violation = 0.0;    ///< worst negative inequality multiplier
    double complementarity = 0.0;   ///< worst |multiplier * slack|
    double budget_multiplier = 0.0; ///< mu
    Eigen::VectorXd multipliers;    ///< d bound multipliers then the return-floor multiplier
    bool flagged = false;

    double max_gap() const;
};

/// Recomputes multipliers from the weights alone (nonnegative least squares
/// over the constraints that are binding at w) and reports every KKT gap.
/// Any gap above `tol` sets `flagged`.
KktReport verify_kkt(const QpProblem& problem, const PortfolioSolution& solution, double tol = 1e-8);

} // namespace mvport
