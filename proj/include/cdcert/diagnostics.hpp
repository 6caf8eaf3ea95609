#pragma once

// Executable convergence certificates for cyclic coordinate descent:
// sufficient decrease (H1), a bounded subgradient witness (H2), the
// stationarity gap, finite length and an empirical linear-rate fit.

#include <cdcert/error.hpp>
#include <cdcert/penalty.hpp>
#include <cdcert/problem.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cdcert {

/// Slack on certificate inequalities; objective differences are differences
/// of O(|b|^2) quantities.
inline constexpr double certificate_slack = 1e-10;

/// Tolerance for d lying in the subdifferential of F.
inline constexpr double membership_tolerance = 1e-8;

struct DecreaseCheck {
    bool ok;
    double margin; ///< (f_prev - f_next) - theta * step_norm_sq
};

/// H1: f_prev - f_next >= theta * step_norm_sq - slack.
inline DecreaseCheck check_sufficient_decrease(double f_prev, double f_next, double step_norm_sq, double theta,
                                               double slack = certificate_slack)
{
    if (!(theta > 0.0)) fail(ErrorCode::invalid_argument, "theta must be > 0");
    const double margin = (f_prev - f_next) - theta * step_norm_sq;
    return {margin >= -slack, margin};
}

/// A^T (A x - b).
inline Vector least_squares_gradient(const Problem& problem, const Vector& x)
{
    return problem.a().transpose() * (problem.a() * x - problem.b());
}

/// The H2 witness d with d_i = sum over coordinates j updated after i in the
/// sweep of (x_next_j - x_prev_j) A_i^T A_j.
///
/// `order` is the coordinate visiting order of the sweep (empty = 0..p-1).
/// Runs in O(np) by accumulating the suffix sum of dx_j A_j backwards.
inline Vector witness_vector(const Problem& problem, const Vector& x_prev, const Vector& x_next,
                             std::span<const Eigen::Index> order = {})
{
    const Eigen::Index p = problem.cols();
    if (x_prev.size() != p || x_next.size() != p) fail(ErrorCode::dimension_mismatch, "witness: iterate length != p");
    if (!order.empty() && static_cast<Eigen::Index>(order.size()) != p)
        fail(ErrorCode::dimension_mismatch, "witness: order length != p");

    Vector d = Vector::Zero(p);
    Vector suffix = Vector::Zero(problem.rows());
    for (Eigen::Index pos = p - 1; pos >= 0; --pos) {
        const Eigen::Index i = order.empty() ? pos : order[static_cast<std::size_t>(pos)];
        d[i] = problem.a().col(i).dot(suffix);
        const double dx = x_next[i] - x_prev[i];
        if (dx != 0.0) suffix.noalias() += dx * problem.a().col(i);
    }
    return d;
}

/// max_i dist(d_i - grad_i, subdifferential of rho at x_i), grad = A^T (A x - b).
/// Zero exactly when d is an element of the limiting subdifferential of F at x.
inline double membership_gap(const Problem& problem, const PenaltySpec& spec, const Vector& x, const Vector& d)
{
    const Vector grad = least_squares_gradient(problem, x);
    double gap = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        gap = std::max(gap, subdifferential(spec, x[i]).distance(d[i] - grad[i]));
    return gap;
}

/// Witness after verifying it is a subgradient of F at x_next.
///
/// Throws ErrorCode::membership_violation when x_next did not come from a
/// valid sweep starting at x_prev.
inline Vector subgradient_witness(const Problem& problem, const PenaltySpec& spec, const Vector& x_prev,
                                  const Vector& x_next, std::span<const Eigen::Index> order = {})
{
    Vector d = witness_vector(problem, x_prev, x_next, order);
    const double gap = membership_gap(problem, spec, x_next, d);
    if (!(gap <= membership_tolerance))
        fail(ErrorCode::membership_violation,
             "witness is not a subgradient of F (gap " + std::to_string(gap) + ")");
    return d;
}

/// Norm of the coordinate-wise distance from 0 to the subdifferential of F.
inline double stationarity_gap(const Problem& problem, const PenaltySpec& spec, const Vector& x)
{
    if (x.size() != problem.cols()) fail(ErrorCode::dimension_mismatch, "stationarity_gap: length != p");
    const Vector grad = least_squares_gradient(problem, x);
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double g = x[i] == 0.0 ? std::max(0.0, std::abs(grad[i]) - spec.lambda())
                                     : std::abs(grad[i] + derivative(spec, x[i]));
        sum_sq += g * g;
    }
    return std::sqrt(sum_sq);
}

/// Everything checked for one sweep x^k -> x^{k+1}.
struct SweepCertificate {
    int sweep = 0;
    double delta_f = 0.0;      ///< F(x^k) - F(x^{k+1})
    double step_norm_sq = 0.0; ///< |x^k - x^{k+1}|^2
    double theta = 0.0;
    bool h1_ok = false;
    double d_norm = 0.0;
    double d_bound = 0.0; ///< p |x^{k+1} - x^k|
    bool h2_ok = false;
    /// |d_i| <= sqrt(p - i) |dx| for every position i in the sweep (sharper
    /// per-coordinate form of the H2 bound).
    bool h2_tight_ok = false;
    double d_membership_gap = 0.0;

    bool ok() const noexcept { return h1_ok && h2_ok && h2_tight_ok && d_membership_gap <= membership_tolerance; }
};

/// Computes the full certificate for one recorded sweep.
inline SweepCertificate certify_sweep(const Problem& problem, const PenaltySpec& spec, int sweep, const Vector& x_prev,
                                      const Vector& x_next, double f_prev, double f_next,
                                      std::span<const Eigen::Index> order = {})
{
    SweepCertificate c;
    c.sweep = sweep;
    c.theta = sufficient_decrease_theta(spec);
    c.step_norm_sq = (x_next - x_prev).squaredNorm();
    c.delta_f = f_prev - f_next;
    c.h1_ok = check_sufficient_decrease(f_prev, f_next, c.step_norm_sq, c.theta).ok;

    const Vector d = witness_vector(problem, x_prev, x_next, order);
    const double step = std::sqrt(c.step_norm_sq);
    const auto p = static_cast<double>(problem.cols());
    c.d_norm = d.norm();
    c.d_bound = p * step;
    c.h2_ok = c.d_norm <= c.d_bound + certificate_slack;

    c.h2_tight_ok = true;
    for (Eigen::Index pos = 0; pos < problem.cols(); ++pos) {
        const Eigen::Index i = order.empty() ? pos : order[static_cast<std::size_t>(pos)];
        const double remaining = static_cast<double>(problem.cols() - 1 - pos);
        if (std::abs(d[i]) > std::sqrt(remaining) * step + certificate_slack) c.h2_tight_ok = false;
    }
    c.d_membership_gap = membership_gap(problem, spec, x_next, d);
    return c;
}

/// Log-linear fit log(step_k) ~ log(eta) + k log(nu) over a trace tail.
struct RateEstimate {
    double nu_hat = 0.0;
    double eta_hat = 0.0;
    double r_squared = 0.0;
    int window_first = 0; ///< first sweep index used (1-based)
    int window_last = 0;
    int points = 0;

    /// nu_hat in (0, 1) with r^2 >= 0.9; otherwise the fit says nothing.
    bool conclusive() const noexcept { return nu_hat > 0.0 && nu_hat < 1.0 && r_squared >= 0.9; }
};

/// Fits a geometric decay to the last `tail_fraction` of step_norms, where
/// step_norms[k-1] is the step of sweep k. Entries at or below
/// 100 * machine epsilon are dropped. Needs at least 5 usable points.
inline RateEstimate estimate_rate(std::span<const double> step_norms, double tail_fraction = 0.5)
{
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        fail(ErrorCode::invalid_argument, "tail_fraction must lie in (0, 1]");
    const auto n = step_norms.size();
    const auto window = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
    const std::size_t first = n - std::min(window, n);
    const double floor = 1e2 * std::numeric_limits<double>::epsilon();

    std::vector<double> ks;
    std::vector<double> logs;
    for (std::size_t i = first; i < n; ++i) {
        if (std::isfinite(step_norms[i]) && step_norms[i] > floor) {
            ks.push_back(static_cast<double>(i + 1));
            logs.push_back(std::log(step_norms[i]));
        }
    }
    if (ks.size() < 5)
        fail(ErrorCode::insufficient_data, "rate fit needs >= 5 usable step norms, have " + std::to_string(ks.size()));

    const auto m = static_cast<double>(ks.size());
    double mk = 0.0;
    double ml = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mk += ks[i];
        ml += logs[i];
    }
    mk /= m;
    ml /= m;
    double skk = 0.0;
    double skl = 0.0;
    double sll = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        skk += (ks[i] - mk) * (ks[i] - mk);
        skl += (ks[i] - mk) * (logs[i] - ml);
        sll += (logs[i] - ml) * (logs[i] - ml);
    }
    const double slope = skl / skk;
    const double intercept = ml - slope * mk;

    RateEstimate est;
    est.nu_hat = std::exp(slope);
    est.eta_hat = std::exp(intercept);
    // A constant sequence is fitted exactly.
    est.r_squared = sll > 0.0 ? (skl * skl) / (skk * sll) : 1.0;
    est.window_first = static_cast<int>(ks.front());
    est.window_last = static_cast<int>(ks.back());
    est.points = static_cast<int>(ks.size());
    return est;
}

struct FiniteLength {
    double total = 0.0;        ///< sum of step norms
    double tail_ratio = 0.0;   ///< step_N / step_{N-1}
    double window_ratio = 0.0; ///< geometric-mean consecutive ratio over the last 10 steps
};

namespace detail {

inline double safe_ratio(double num, double den)
{
    if (den > 0.0) return num / den;
    return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

} // namespace detail

inline FiniteLength finite_length(std::span<const double> step_norms)
{
    FiniteLength out;
    for (const double s : step_norms) out.total += s;
    const auto n = step_norms.size();
    if (n >= 2) {
        out.tail_ratio = detail::safe_ratio(step_norms[n - 1], step_norms[n - 2]);
        const std::size_t span = std::min<std::size_t>(n, 10);
        const double r = detail::safe_ratio(step_norms[n - 1], step_norms[n - span]);
        out.window_ratio = std::isfinite(r) ? std::pow(r, 1.0 / static_cast<double>(span - 1)) : r;
    }
    return out;
}

} // namespace cdcert
