#pragma once

#include <cdcert/diagnostics.hpp>
#include <cdcert/error.hpp>
#include <cdcert/penalty.hpp>
#include <cdcert/problem.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace cdcert {

enum class SweepOrder { cyclic, shuffled };

constexpr std::string_view to_string(SweepOrder o) noexcept
{
    return o == SweepOrder::cyclic ? "cyclic" : "shuffled";
}

struct SolverOptions {
    int max_sweeps = 10000;
    /// Stop once |x^{k+1} - x^k|_2 <= tol.
    double tol = 1e-8;
    /// Starting point on the unit-column scale; zero when empty.
    std::optional<Vector> init;
    bool collect_certificates = false;
    int residual_refresh_period = 100;
    /// Shuffled order draws a fresh permutation per sweep. The convergence
    /// certificates are only guaranteed for the cyclic order.
    SweepOrder order = SweepOrder::cyclic;
    std::uint64_t shuffle_seed = 0;
    /// Keep every iterate x^0, x^1, ... in the trace (for offline certificates).
    bool keep_iterates = false;

    void validate(Eigen::Index p) const
    {
        if (max_sweeps < 1) fail(ErrorCode::invalid_argument, "max_sweeps must be >= 1");
        if (!(tol > 0.0) || !std::isfinite(tol)) fail(ErrorCode::invalid_argument, "tol must be a positive number");
        if (residual_refresh_period < 1) fail(ErrorCode::invalid_argument, "residual_refresh_period must be >= 1");
        if (init) {
            if (init->size() != p) fail(ErrorCode::dimension_mismatch, "init length does not match p");
            if (!init->allFinite()) fail(ErrorCode::non_finite, "init has non-finite entries");
        }
    }
};

enum class SolveStatus { converged, max_sweeps };

constexpr std::string_view to_string(SolveStatus s) noexcept
{
    return s == SolveStatus::converged ? "converged" : "max_sweeps";
}

/// One sweep x^{k-1} -> x^k, with k = sweep.
struct SweepRecord {
    int sweep = 0;
    double objective = 0.0; ///< F(x^k)
    double step_norm = 0.0; ///< |x^k - x^{k-1}|
    double h1_lhs = 0.0;    ///< F(x^{k-1}) - F(x^k)
    double h1_rhs = 0.0;    ///< theta |x^k - x^{k-1}|^2
    std::optional<SweepCertificate> certificate;
};

struct SolveTrace {
    double theta = 0.0;
    double initial_objective = 0.0;
    std::vector<SweepRecord> sweeps;
    /// x^0, x^1, ... when SolverOptions::keep_iterates is set.
    std::vector<Vector> iterates;
    /// Per-sweep coordinate orders, only for shuffled runs with kept iterates.
    std::vector<std::vector<Eigen::Index>> orders;

    std::vector<double> step_norms() const
    {
        std::vector<double> out;
        out.reserve(sweeps.size());
        for (const auto& s : sweeps) out.push_back(s.step_norm);
        return out;
    }
};

struct SolveResult {
    PenaltySpec penalty = PenaltySpec::lasso(1.0);
    SolverOptions options;
    Vector x_hat;            ///< original column scale
    Vector x_hat_normalized; ///< unit column scale
    SolveStatus status = SolveStatus::max_sweeps;
    int sweeps = 0;
    double objective = 0.0;
    double stationarity_gap = 0.0;
    /// max_k |x^k|; a finite value witnesses bounded iterates for this run.
    double iterate_norm_max = 0.0;
    SolveTrace trace;

    Eigen::Index support_size() const { return (x_hat_normalized.array() != 0.0).count(); }
};

/// 1/2 |A x - b|^2 + sum_i rho(x_i).
inline double objective(const Problem& problem, const PenaltySpec& spec, const Vector& x)
{
    if (x.size() != problem.cols()) fail(ErrorCode::dimension_mismatch, "objective: x length != p");
    double pen = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) pen += value(spec, x[i]);
    return 0.5 * (problem.a() * x - problem.b()).squaredNorm() + pen;
}

/// max_i |A_i^T b|; for lambda at or above this value x = 0 is stationary.
inline double lambda_max(const Problem& problem)
{
    return (problem.a().transpose() * problem.b()).cwiseAbs().maxCoeff();
}

/// Iterate together with its residual b - A x.
struct CdState {
    Vector x;
    Vector residual;

    static CdState at(const Problem& problem, Vector x)
    {
        Vector r = problem.b() - problem.a() * x;
        return {std::move(x), std::move(r)};
    }

    void refresh(const Problem& problem) { residual = problem.b() - problem.a() * x; }
};

/// One Gauss-Seidel pass: for each coordinate i in order,
/// c_i = A_i^T r + x_i, x_i <- threshold(c_i), r <- r - dx_i A_i.
///
/// `order` empty means 0..p-1.
inline void cd_sweep(CdState& state, const Problem& problem, const PenaltySpec& spec,
                     std::span<const Eigen::Index> order = {})
{
    const Eigen::Index p = problem.cols();
    for (Eigen::Index pos = 0; pos < p; ++pos) {
        const Eigen::Index i = order.empty() ? pos : order[static_cast<std::size_t>(pos)];
        const auto col = problem.a().col(i);
        const double old = state.x[i];
        const double c = col.dot(state.residual) + old;
        if (!std::isfinite(c)) fail(ErrorCode::corrupt_state, "non-finite coordinate input at index " + std::to_string(i));
        const double next = threshold(spec, c);
        if (next != old) {
            state.residual.noalias() -= (next - old) * col;
            state.x[i] = next;
        }
    }
}

namespace detail {

inline double objective_from_residual(const PenaltySpec& spec, const CdState& state)
{
    double pen = 0.0;
    for (Eigen::Index i = 0; i < state.x.size(); ++i) pen += value(spec, state.x[i]);
    return 0.5 * state.residual.squaredNorm() + pen;
}

// Fisher-Yates driven by mt19937_64 directly, so the permutation sequence is
// the same on every standard library.
inline void shuffle_order(std::vector<Eigen::Index>& order, std::mt19937_64& rng)
{
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
}

} // namespace detail

/// Cyclic coordinate descent from opts.init (default zero) until the step
/// norm drops to opts.tol or opts.max_sweeps is reached.
///
/// The objective and all certificates live on the unit-column scale.
inline SolveResult solve(const Problem& problem, const PenaltySpec& spec, const SolverOptions& opts = {})
{
    const Eigen::Index p = problem.cols();
    opts.validate(p);

    SolveResult result;
    result.penalty = spec;
    result.options = opts;
    CdState state = CdState::at(problem, opts.init ? *opts.init : Vector::Zero(p));

    SolveTrace& trace = result.trace;
    trace.theta = sufficient_decrease_theta(spec);
    trace.initial_objective = detail::objective_from_residual(spec, state);
    if (opts.keep_iterates) trace.iterates.push_back(state.x);
    result.iterate_norm_max = state.x.norm();

    std::vector<Eigen::Index> order;
    std::mt19937_64 rng(opts.shuffle_seed);
    if (opts.order == SweepOrder::shuffled) {
        order.resize(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
    }

    double f_prev = trace.initial_objective;
    Vector x_prev(p);
    for (int k = 1; k <= opts.max_sweeps; ++k) {
        x_prev = state.x;
        if (opts.order == SweepOrder::shuffled) detail::shuffle_order(order, rng);
        cd_sweep(state, problem, spec, order);
        if (k % opts.residual_refresh_period == 0) state.refresh(problem);

        SweepRecord rec;
        rec.sweep = k;
        rec.objective = detail::objective_from_residual(spec, state);
        const double step_sq = (state.x - x_prev).squaredNorm();
        rec.step_norm = std::sqrt(step_sq);
        rec.h1_lhs = f_prev - rec.objective;
        rec.h1_rhs = trace.theta * step_sq;
        if (opts.collect_certificates)
            rec.certificate = certify_sweep(problem, spec, k, x_prev, state.x, f_prev, rec.objective, order);
        trace.sweeps.push_back(std::move(rec));
        if (opts.keep_iterates) {
            trace.iterates.push_back(state.x);
            if (!order.empty()) trace.orders.push_back(order);
        }

        result.iterate_norm_max = std::max(result.iterate_norm_max, state.x.norm());
        f_prev = trace.sweeps.back().objective;
        result.sweeps = k;
        if (trace.sweeps.back().step_norm <= opts.tol) {
            result.status = SolveStatus::converged;
            break;
        }
    }

    result.x_hat_normalized = std::move(state.x);
    result.x_hat = problem.to_original_scale(result.x_hat_normalized);
    result.objective = objective(problem, spec, result.x_hat_normalized);
    result.stationarity_gap = stationarity_gap(problem, spec, result.x_hat_normalized);
    return result;
}

struct PathPoint {
    double lambda = 0.0;
    Eigen::Index support_size = 0;
    SolveResult result;
};

/// Solves along a descending lambda grid, warm-starting each solve from the
/// previous solution. opts.init seeds the first solve only. Repeated values
/// are allowed and re-solve from the previous fixed point.
inline std::vector<PathPoint> regularization_path(const Problem& problem, Family family, double tau,
                                                  std::span<const double> lambdas, SolverOptions opts = {})
{
    if (lambdas.empty()) fail(ErrorCode::invalid_argument, "lambda grid is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i]))
            fail(ErrorCode::invalid_argument, "lambda grid entries must be positive and finite");
        if (i > 0 && lambdas[i] > lambdas[i - 1])
            fail(ErrorCode::invalid_argument, "lambda grid must be descending");
    }
    std::vector<PathPoint> path;
    path.reserve(lambdas.size());
    for (const double lam : lambdas) {
        SolveResult r = solve(problem, PenaltySpec(family, lam, tau), opts);
        opts.init = r.x_hat_normalized;
        const auto support = r.support_size();
        path.push_back({lam, support, std::move(r)});
    }
    return path;
}

/// Geometric grid of `count` values from lambda_max down to ratio * lambda_max.
inline std::vector<double> geometric_lambda_grid(double lambda_max, double ratio, int count)
{
    if (!(lambda_max > 0.0)) fail(ErrorCode::invalid_argument, "lambda_max must be > 0");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::invalid_argument, "lambda ratio must lie in (0, 1)");
    if (count < 1) fail(ErrorCode::invalid_argument, "grid needs at least one point");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        grid[static_cast<std::size_t>(i)] =
            count == 1 ? lambda_max : lambda_max * std::pow(ratio, static_cast<double>(i) / (count - 1));
    return grid;
}

/// Indices i > 0 where the support shrank while lambda decreased.
inline std::vector<std::size_t> support_shrinks(const std::vector<PathPoint>& path)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < path.size(); ++i)
        if (path[i].support_size < path[i - 1].support_size) out.push_back(i);
    return out;
}

} // namespace cdcert
