#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls the closed-form threshold, the residual-maintained sweep, or the
// suffix-sum witness.

#include <cdcert/penalty.hpp>
#include <cdcert/problem.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using cdcert::Family;
using cdcert::Matrix;
using cdcert::PenaltySpec;
using cdcert::Vector;

/// Penalty integrand rho'(s) for s >= 0 written straight from the integral
/// definitions.
inline double integrand(const PenaltySpec& spec, double s)
{
    const double lam = spec.lambda();
    const double tau = spec.tau();
    switch (spec.family()) {
    case Family::lasso: return lam;
    case Family::scad: return lam * std::min(1.0, std::max(0.0, lam * tau - s) / (lam * (tau - 1.0)));
    case Family::mcp: return lam * std::max(0.0, 1.0 - s / (lam * tau));
    }
    return 0.0;
}

/// Composite Simpson rule for rho(t) = int_0^{|t|} integrand.
inline double integrated_value(const PenaltySpec& spec, double t, int intervals = 200000)
{
    const double a = std::abs(t);
    if (a == 0.0) return 0.0;
    const double h = a / intervals;
    double sum = integrand(spec, 0.0) + integrand(spec, a);
    for (int k = 1; k < intervals; ++k) sum += (k % 2 ? 4.0 : 2.0) * integrand(spec, k * h);
    return sum * h / 3.0;
}

template <typename F>
double central_difference(F&& f, double t, double h = 1e-6)
{
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

template <typename F>
double second_difference(F&& f, double t, double h = 1e-4)
{
    return (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
}

/// argmin of 1/2 (t - v)^2 + rho(t) by exhaustive scan of [lo, hi].
inline double grid_argmin(const PenaltySpec& spec, double v, double lo, double hi, double step)
{
    const auto count = static_cast<std::int64_t>(std::llround((hi - lo) / step));
    double best_t = lo;
    double best_f = 0.5 * (lo - v) * (lo - v) + cdcert::value(spec, lo);
    for (std::int64_t k = 1; k <= count; ++k) {
        const double t = lo + static_cast<double>(k) * step;
        const double f = 0.5 * (t - v) * (t - v) + cdcert::value(spec, t);
        if (f < best_f) {
            best_f = f;
            best_t = t;
        }
    }
    return best_t;
}

/// F(x) by explicit loops.
inline double objective_loops(const Matrix& a, const Vector& b, const PenaltySpec& spec, const Vector& x)
{
    double rss = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double fit = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) fit += a(i, j) * x[j];
        rss += (fit - b[i]) * (fit - b[i]);
    }
    double pen = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) pen += cdcert::value(spec, x[j]);
    return 0.5 * rss + pen;
}

inline double column_dot(const Matrix& a, Eigen::Index i, Eigen::Index j)
{
    double s = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
    return s;
}

/// d_i = sum_{j>i} (x_next_j - x_prev_j) A_i^T A_j, literal O(p^2 n) loop.
inline Vector witness_double_loop(const Matrix& a, const Vector& x_prev, const Vector& x_next)
{
    const Eigen::Index p = a.cols();
    Vector d = Vector::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) d[i] += (x_next[j] - x_prev[j]) * column_dot(a, i, j);
    return d;
}

/// One cyclic sweep with c_i formed from scratch as
/// A_i^T (b - sum_{j<i} x_j^{new} A_j - sum_{j>i} x_j^{old} A_j), each scalar
/// subproblem solved by `scalar_min(c)`.
template <typename ScalarMap>
Vector literal_sweep(const Matrix& a, const Vector& b, const Vector& x_old, ScalarMap&& scalar_min)
{
    const Eigen::Index p = a.cols();
    Vector x = x_old;
    for (Eigen::Index i = 0; i < p; ++i) {
        Vector partial = b;
        for (Eigen::Index j = 0; j < p; ++j)
            if (j != i) partial -= x[j] * a.col(j);
        double c = 0.0;
        for (Eigen::Index r = 0; r < a.rows(); ++r) c += a(r, i) * partial[r];
        x[i] = scalar_min(c);
    }
    return x;
}

/// Lasso reference: FISTA to a tight tolerance, then the support/sign pattern
/// is fixed and the KKT linear system solved exactly on it.
inline Vector lasso_reference(const Matrix& a, const Vector& b, double lambda, int iterations = 30000)
{
    const Eigen::Index p = a.cols();
    // Lipschitz constant by power iteration.
    Vector v = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
    double lip = 1.0;
    for (int k = 0; k < 500; ++k) {
        Vector w = a.transpose() * (a * v);
        lip = w.norm();
        v = w / lip;
    }
    lip *= 1.01;

    auto soft = [&](const Vector& z, double thr) {
        Vector out(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            out[i] = z[i] > thr ? z[i] - thr : (z[i] < -thr ? z[i] + thr : 0.0);
        return out;
    };
    Vector x = Vector::Zero(p);
    Vector y = x;
    double t = 1.0;
    for (int k = 0; k < iterations; ++k) {
        const Vector grad = a.transpose() * (a * y - b);
        const Vector x_next = soft(y - grad / lip, lambda / lip);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_next + ((t - 1.0) / t_next) * (x_next - x);
        x = x_next;
        t = t_next;
    }

    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < p; ++i)
        if (std::abs(x[i]) > 1e-9) support.push_back(i);
    if (support.empty()) return Vector::Zero(p);
    const auto s = static_cast<Eigen::Index>(support.size());
    Matrix as(a.rows(), s);
    Vector signs(s);
    for (Eigen::Index k = 0; k < s; ++k) {
        as.col(k) = a.col(support[static_cast<std::size_t>(k)]);
        signs[k] = x[support[static_cast<std::size_t>(k)]] > 0 ? 1.0 : -1.0;
    }
    const Vector xs = (as.transpose() * as).ldlt().solve(as.transpose() * b - lambda * signs);
    Vector polished = Vector::Zero(p);
    for (Eigen::Index k = 0; k < s; ++k) polished[support[static_cast<std::size_t>(k)]] = xs[k];
    return polished;
}

/// Convex KKT residual for the Lasso: max violation of
/// A_i^T (b - A x) = lambda sgn(x_i) on the support, |.| <= lambda off it.
inline double lasso_kkt_violation(const Matrix& a, const Vector& b, double lambda, const Vector& x)
{
    const Vector corr = a.transpose() * (b - a * x);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double viol = x[i] == 0.0 ? std::max(0.0, std::abs(corr[i]) - lambda)
                                        : std::abs(corr[i] - lambda * (x[i] > 0 ? 1.0 : -1.0));
        worst = std::max(worst, viol);
    }
    return worst;
}

/// FNV-1a over the raw bytes of a sequence of doubles.
inline std::uint64_t fnv1a(const double* data, std::size_t count, std::uint64_t h = 1469598103934665603ULL)
{
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < count * sizeof(double); ++k) {
        h ^= bytes[k];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace oracle
