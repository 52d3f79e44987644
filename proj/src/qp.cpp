#include "mvport/qp.hpp"
#include "mvport/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>

namespace mvport
{

namespace
{

constexpr double kStepTol = 1e-12;
constexpr double kDirectionTol = 1e-12;
constexpr int kMaxRidgeEscalations = 3;

struct KktStep
{
    Eigen::VectorXd step;
    Eigen::VectorXd dual; ///< z in [H A'; A 0][p; z] = [-g; 0]; multipliers are -z
};

bool acceptable(const Eigen::MatrixXd& k, const Eigen::VectorXd& x, const Eigen::VectorXd& rhs)
{
    if (!x.allFinite())
        return false;
    const double residual = (k * x - rhs).lpNorm<Eigen::Infinity>();
    const double scale = k.lpNorm<Eigen::Infinity>() * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    return residual <= 1e-9 * scale + 1e-300;
}

// Equality-constrained subproblem on the working set. Symmetric LDL' first,
// full-pivot LU when that is unreliable, one refinement pass either way;
// nullopt when the system is singular.
std::optional<KktStep> solve_kkt(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a, const Eigen::VectorXd& g)
{
    const Eigen::Index d = h.rows();
    const Eigen::Index m = a.rows();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d + m, d + m);
    k.topLeftCorner(d, d) = h;
    k.topRightCorner(d, m) = a.transpose();
    k.bottomLeftCorner(m, d) = a;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + m);
    rhs.head(d) = -g;

    Eigen::VectorXd x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    bool ok = false;
    if (ldlt.info() == Eigen::Success)
    {
        x = ldlt.solve(rhs);
        x += ldlt.solve(rhs - k * x);
        ok = acceptable(k, x, rhs);
    }
    if (!ok)
    {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
        if (!lu.isInvertible())
            return std::nullopt;
        x = lu.solve(rhs);
        x += lu.solve(rhs - k * x);
        if (!acceptable(k, x, rhs))
            return std::nullopt;
    }
    return KktStep{x.head(d), x.tail(m)};
}

Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& q)
{
    return 0.5 * (q + q.transpose());
}

// Lawson-Hanson: argmin ||a x - b|| subject to x >= 0.
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    const Eigen::Index n = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (n == 0)
        return x;
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    const double tol = 1e-14 * std::max(1.0, a.lpNorm<Eigen::Infinity>()) * std::max(1.0, b.lpNorm<Eigen::Infinity>());

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)])
                idx.push_back(j);
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k)
            sub.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
        const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k)
            z(idx[k]) = zs(static_cast<Eigen::Index>(k));
        return z;
    };

    for (int outer = 0; outer < 3 * static_cast<int>(n) + 3; ++outer)
    {
        const Eigen::VectorXd grad = a.transpose() * (b - a * x);
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && grad(j) > tol && (enter < 0 || grad(j) > grad(enter)))
                enter = j;
        if (enter < 0)
            break;
        passive[static_cast<std::size_t>(enter)] = 1;
        while (true)
        {
            const Eigen::VectorXd z = solve_passive();
            double alpha = 1.0;
            bool clipped = false;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
                {
                    const double denom = x(j) - z(j);
                    const double t = denom > 0.0 ? x(j) / denom : 0.0;
                    if (t < alpha)
                        alpha = t;
                    clipped = true;
                }
            if (!clipped)
            {
                x = z;
                break;
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && x(j) <= 0.0)
                {
                    passive[static_cast<std::size_t>(j)] = 0;
                    x(j) = 0.0;
                }
        }
    }
    return x;
}

} // namespace

void QpProblem::validate() const
{
    const Eigen::Index d = r.size();
    if (d < 1)
        throw DataError("QP needs at least one asset");
    if (q.rows() != d || q.cols() != d)
        throw DataError(fmt::format("QP covariance is {}x{} but the return vector has {} entries", q.rows(),
                                    q.cols(), d));
    if (!q.allFinite() || !r.allFinite() || !std::isfinite(r0) || !std::isfinite(ridge))
        throw DataError("QP data must be finite");
    if (ridge < 0.0)
        throw DataError(fmt::format("ridge must be nonnegative (got {})", ridge));
    const double scale = std::max(1.0, q.lpNorm<Eigen::Infinity>());
    if ((q - q.transpose()).lpNorm<Eigen::Infinity>() > 1e-14 * scale)
        throw DataError("QP covariance is not symmetric");
}

bool is_feasible(const Eigen::VectorXd& r, double r0)
{
    if (r.size() == 0)
        throw DataError("return vector is empty");
    return r.maxCoeff() >= r0;
}

double default_ridge(const Eigen::MatrixXd& q)
{
    const double trace = q.trace();
    if (q.rows() == 0 || !(trace > 0.0))
        return 1e-12;
    return 1e-8 * trace / static_cast<double>(q.rows());
}

Eigen::MatrixXd regularize(const Eigen::MatrixXd& q, double ridge)
{
    if (ridge < 0.0)
        throw DataError(fmt::format("ridge must be nonnegative (got {})", ridge));
    Eigen::MatrixXd out = q;
    out.diagonal().array() += ridge;
    return out;
}

PortfolioSolution solve(const QpProblem& problem, const QpOptions& options)
{
    problem.validate();
    const Eigen::Index d = problem.dim();
    const auto& r = problem.r;

    PortfolioSolution sol;
    sol.ridge_used = problem.ridge;
    if (!is_feasible(r, problem.r0))
        return sol;

    const Eigen::MatrixXd q = symmetric_part(problem.q);
    double ridge = problem.ridge;
    Eigen::MatrixXd h = regularize(q, ridge);

    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < d; ++j)
        if (r(j) > r(best))
            best = j;

    // Start at the best-return vertex with every other bound binding.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    w(best) = 1.0;
    std::vector<char> working(static_cast<std::size_t>(d + 1), 0);
    for (Eigen::Index j = 0; j < d; ++j)
        working[static_cast<std::size_t>(j)] = j != best;

    // The return floor enters the KKT system unit-normalized.
    const double r_norm = r.norm() > 0.0 ? r.norm() : 1.0;
    auto constraint_row = [&](Eigen::Index i) -> Eigen::RowVectorXd {
        if (i < d)
            return Eigen::RowVectorXd::Unit(d, i);
        return r.transpose() / r_norm;
    };
    auto slack = [&](Eigen::Index i) { return i < d ? w(i) : (r.dot(w) - problem.r0) / r_norm; };

    const int cap = options.max_changes_per_dim * static_cast<int>(d);
    int escalations = 0;
    bool at_subspace_minimum = false;
    // Set while steps have zero length; switches the drop rule to the lowest
    // index so degenerate vertices cannot cycle.
    bool degenerate = false;
    std::vector<Eigen::Index> rows;
    KktStep step;

    while (true)
    {
        rows.clear();
        for (Eigen::Index i = 0; i <= d; ++i)
            if (working[static_cast<std::size_t>(i)])
                rows.push_back(i);
        const auto m = static_cast<Eigen::Index>(rows.size()) + 1;
        Eigen::MatrixXd a(m, d);
        a.row(0).setOnes();
        for (Eigen::Index k = 1; k < m; ++k)
            a.row(k) = constraint_row(rows[static_cast<std::size_t>(k - 1)]);

        auto kkt = solve_kkt(h, a, h * w);
        if (!kkt)
        {
            if (escalations == kMaxRidgeEscalations)
                throw NumericalError(fmt::format("singular KKT system after {} ridge escalations (ridge {})",
                                                 escalations, ridge));
            const double base = ridge > 0.0 ? ridge : 1e-12 * std::max(1.0, q.trace() / static_cast<double>(d));
            ridge = base * 10.0;
            h = regularize(q, ridge);
            ++escalations;
            at_subspace_minimum = false;
            continue;
        }
        step = std::move(*kkt);
        if (!step.step.allFinite() || !step.dual.allFinite())
            throw NumericalError("non-finite values in the KKT step");
        // d independent rows pin w; anything left in the step is round-off.
        if (m >= d)
            step.step.setZero();

        if (at_subspace_minimum || step.step.lpNorm<Eigen::Infinity>() <= kStepTol)
        {
            // Multipliers of the working inequalities are -z; drop the most
            // negative one, lowest index on ties.
            Eigen::Index drop = -1;
            double most_negative = -options.multiplier_tol;
            for (Eigen::Index k = 1; k < m; ++k)
            {
                const double lambda = -step.dual(k);
                if (lambda < most_negative)
                {
                    most_negative = lambda;
                    drop = rows[static_cast<std::size_t>(k - 1)];
                    if (degenerate)
                        break;
                }
            }
            if (drop < 0)
                break;
            working[static_cast<std::size_t>(drop)] = 0;
            at_subspace_minimum = false;
            if (++sol.working_set_changes > cap)
                throw NumericalError(fmt::format("active-set iteration cap ({} working-set changes) exceeded", cap));
            continue;
        }

        const auto& p = step.step;
        const double pnorm = p.lpNorm<Eigen::Infinity>();
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i <= d; ++i)
        {
            if (working[static_cast<std::size_t>(i)])
                continue;
            const Eigen::RowVectorXd row = constraint_row(i);
            const double ap = row.dot(p);
            if (ap >= -kDirectionTol * row.lpNorm<Eigen::Infinity>() * pnorm)
                continue;
            const double ratio = std::max(0.0, slack(i)) / -ap;
            if (ratio < alpha)
            {
                alpha = ratio;
                blocking = i;
            }
        }
        w += alpha * p;
        for (Eigen::Index j = 0; j < d; ++j)
            if (working[static_cast<std::size_t>(j)])
                w(j) = 0.0;
        degenerate = blocking >= 0 && alpha * pnorm <= kStepTol;
        if (blocking >= 0)
        {
            if (blocking < d)
                w(blocking) = 0.0;
            working[static_cast<std::size_t>(blocking)] = 1;
            at_subspace_minimum = false;
            if (++sol.working_set_changes > cap)
                throw NumericalError(fmt::format("active-set iteration cap ({} working-set changes) exceeded", cap));
        }
        else
        {
            at_subspace_minimum = true;
        }
    }

    // Remove sub-tolerance dust so downstream accounting sees exact weights.
    w = w.cwiseMax(0.0).cwiseMin(1.0);
    w /= w.sum();

    Eigen::VectorXd multiplier_term = Eigen::VectorXd::Constant(d, -step.dual(0));
    for (std::size_t k = 0; k < rows.size(); ++k)
        multiplier_term += -step.dual(static_cast<Eigen::Index>(k + 1)) *
                           constraint_row(rows[k]).transpose();
    sol.kkt_residual = (h * w - multiplier_term).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(sol.kkt_residual) || sol.kkt_residual > options.kkt_tol)
        throw NumericalError(fmt::format("active-set solution misses stationarity: residual {:.3e}",
                                         sol.kkt_residual));

    sol.status = QpStatus::optimal;
    sol.weights = std::move(w);
    sol.objective = 0.5 * sol.weights.dot(q * sol.weights);
    sol.active_set.assign(rows.begin(), rows.end());
    sol.ridge_used = ridge;
    return sol;
}

double KktReport::max_gap() const
{
    return std::max({stationarity, primal_violation, dual_violation, complementarity});
}

KktReport verify_kkt(const QpProblem& problem, const PortfolioSolution& solution, double tol)
{
    if (solution.status != QpStatus::optimal)
        throw DataError("verify_kkt needs an optimal solution");
    problem.validate();
    const Eigen::Index d = problem.dim();
    const auto& w = solution.weights;
    if (w.size() != d)
        throw DataError("solution and problem dimensions differ");
    const auto& r = problem.r;
    constexpr double active_tol = 1e-10;

    const Eigen::VectorXd hw = regularize(symmetric_part(problem.q), problem.ridge) * w;
    const double return_slack = r.dot(w) - problem.r0;

    std::vector<Eigen::Index> bounds;
    for (Eigen::Index j = 0; j < d; ++j)
        if (w(j) <= active_tol)
            bounds.push_back(j);

    const bool floor_binding = return_slack <= active_tol && r.norm() > 0.0;
    const auto ncols = static_cast<Eigen::Index>(bounds.size() + (floor_binding ? 1 : 0));
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, ncols);
    for (std::size_t k = 0; k < bounds.size(); ++k)
        c(bounds[k], static_cast<Eigen::Index>(k)) = 1.0;
    if (floor_binding)
        c.col(ncols - 1) = r / r.norm();

    // Degenerate vertices admit many multiplier sets; KKT holds iff one of
    // them is nonnegative, so fit the inequality multipliers by NNLS with the
    // free budget multiplier projected out along the ones direction.
    const Eigen::MatrixXd centered_c = c.rowwise() - c.colwise().mean();
    const Eigen::VectorXd centered_hw = hw.array() - hw.mean();
    const Eigen::VectorXd coef = nonnegative_least_squares(centered_c, centered_hw);
    const double mu = (hw - c * coef).mean();

    KktReport report;
    report.multipliers = Eigen::VectorXd::Zero(d + 1);
    report.budget_multiplier = mu;
    for (std::size_t k = 0; k < bounds.size(); ++k)
        report.multipliers(bounds[k]) = coef(static_cast<Eigen::Index>(k));
    if (floor_binding)
        report.multipliers(d) = coef(ncols - 1) / r.norm();

    report.stationarity = (hw - c * coef - Eigen::VectorXd::Constant(d, mu)).lpNorm<Eigen::Infinity>();
    report.primal_violation =
        std::max({0.0, -w.minCoeff(), std::abs(w.sum() - 1.0), -return_slack});
    report.dual_violation = std::max(0.0, -report.multipliers.minCoeff());
    for (Eigen::Index j = 0; j < d; ++j)
        report.complementarity = std::max(report.complementarity, std::abs(report.multipliers(j) * w(j)));
    report.complementarity = std::max(report.complementarity, std::abs(report.multipliers(d) * return_slack));
    report.flagged = !(report.max_gap() <= tol);
    return report;
}

} // namespace mvport
