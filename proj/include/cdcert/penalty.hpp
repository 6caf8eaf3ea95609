#pragma once

#include <cdcert/error.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdcert {

enum class Family { lasso, scad, mcp };

constexpr std::string_view to_string(Family f) noexcept
{
    switch (f) {
    case Family::lasso: return "lasso";
    case Family::scad: return "scad";
    case Family::mcp: return "mcp";
    }
    return "unknown";
}

inline std::optional<Family> parse_family(std::string_view name)
{
    if (name == "lasso") return Family::lasso;
    if (name == "scad") return Family::scad;
    if (name == "mcp") return Family::mcp;
    return std::nullopt;
}

/// Closed interval [lo, hi].
template <std::floating_point T>
struct Interval {
    T lo;
    T hi;

    bool contains(T v) const noexcept { return lo <= v && v <= hi; }

    /// Distance from v to the interval; zero inside.
    T distance(T v) const noexcept
    {
        if (v < lo) return lo - v;
        if (v > hi) return v - hi;
        return T(0);
    }
};

/// Separable penalty rho_{lambda,tau} of one of the three supported families.
///
/// Immutable once constructed. Construction enforces lambda > 0, finite
/// parameters, tau > 2 for SCAD and tau > 1 for MCP. The latter two keep the
/// scalar subproblem 1/2 (t - v)^2 + rho(t) strictly convex, so the
/// thresholding map is single-valued. tau is stored but ignored for Lasso.
template <std::floating_point T>
class BasicPenaltySpec {
public:
    BasicPenaltySpec(Family family, T lambda, T tau = T(0)) : family_(family), lambda_(lambda), tau_(tau)
    {
        if (!std::isfinite(lambda) || !std::isfinite(tau))
            fail(ErrorCode::invalid_argument, "penalty parameters must be finite");
        if (!(lambda > T(0))) fail(ErrorCode::invalid_argument, "lambda must be > 0");
        if (family == Family::scad && !(tau > T(2)))
            fail(ErrorCode::invalid_argument, "SCAD requires tau > 2");
        if (family == Family::mcp && !(tau > T(1)))
            fail(ErrorCode::invalid_argument, "MCP requires tau > 1");
    }

    static BasicPenaltySpec lasso(T lambda) { return {Family::lasso, lambda, T(0)}; }
    static BasicPenaltySpec scad(T lambda, T tau) { return {Family::scad, lambda, tau}; }
    static BasicPenaltySpec mcp(T lambda, T tau) { return {Family::mcp, lambda, tau}; }

    Family family() const noexcept { return family_; }
    T lambda() const noexcept { return lambda_; }
    T tau() const noexcept { return tau_; }

    /// Same family and tau, different lambda.
    BasicPenaltySpec with_lambda(T lambda) const { return {family_, lambda, tau_}; }

    friend bool operator==(const BasicPenaltySpec&, const BasicPenaltySpec&) = default;

private:
    Family family_;
    T lambda_;
    T tau_;
};

using PenaltySpec = BasicPenaltySpec<double>;

namespace detail {

template <std::floating_point T>
constexpr T sign(T v) noexcept
{
    return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

} // namespace detail

/// rho_{lambda,tau}(t). Even, non-negative, continuous, zero at the origin.
template <std::floating_point T>
T value(const BasicPenaltySpec<T>& spec, T t) noexcept
{
    const T a = std::abs(t);
    const T lam = spec.lambda();
    const T tau = spec.tau();
    switch (spec.family()) {
    case Family::lasso:
        return lam * a;
    case Family::scad:
        if (a <= lam) return lam * a;
        if (a <= lam * tau) return (lam * tau * a - T(0.5) * (a * a + lam * lam)) / (tau - T(1));
        return lam * lam * (tau + T(1)) / T(2);
    case Family::mcp:
        if (a < lam * tau) return lam * (a - a * a / (T(2) * lam * tau));
        return lam * lam * tau / T(2);
    }
    return T(0);
}

/// d/dt rho(t) for t != 0, from the integral form of each penalty.
///
/// Throws ErrorCode::domain at t = 0; use subdifferential_at_zero there.
template <std::floating_point T>
T derivative(const BasicPenaltySpec<T>& spec, T t)
{
    if (t == T(0)) fail(ErrorCode::domain, "penalty derivative is undefined at t = 0");
    const T a = std::abs(t);
    const T lam = spec.lambda();
    const T tau = spec.tau();
    T mag = T(0);
    switch (spec.family()) {
    case Family::lasso:
        mag = lam;
        break;
    case Family::scad:
        if (a <= lam)
            mag = lam;
        else if (a < lam * tau)
            mag = (lam * tau - a) / (tau - T(1));
        break;
    case Family::mcp:
        if (a < lam * tau) mag = lam - a / tau;
        break;
    }
    return t > T(0) ? mag : -mag;
}

template <std::floating_point T>
Interval<T> subdifferential_at_zero(const BasicPenaltySpec<T>& spec) noexcept
{
    return {-spec.lambda(), spec.lambda()};
}

/// Subdifferential of rho at t: [-lambda, lambda] at the origin, the
/// derivative singleton elsewhere.
template <std::floating_point T>
Interval<T> subdifferential(const BasicPenaltySpec<T>& spec, T t)
{
    if (t == T(0)) return subdifferential_at_zero(spec);
    const T d = derivative(spec, t);
    return {d, d};
}

/// Number of closed-form branches of the thresholding operator.
template <std::floating_point T>
constexpr int threshold_branch_count(const BasicPenaltySpec<T>& spec) noexcept
{
    switch (spec.family()) {
    case Family::lasso: return 2;
    case Family::scad: return 4;
    case Family::mcp: return 3;
    }
    return 0;
}

/// Magnitude breakpoints separating consecutive threshold branches, ascending.
template <std::floating_point T>
std::vector<T> threshold_breakpoints(const BasicPenaltySpec<T>& spec)
{
    const T lam = spec.lambda();
    switch (spec.family()) {
    case Family::lasso: return {lam};
    case Family::scad: return {lam, T(2) * lam, lam * spec.tau()};
    case Family::mcp: return {lam, lam * spec.tau()};
    }
    return {};
}

/// Evaluates branch `branch` of the thresholding formula at magnitude a >= 0,
/// ignoring the branch's domain. Branches are numbered from the origin
/// outwards: dead zone, soft (Lasso/SCAD), SCAD interpolation or MCP firm,
/// identity.
template <std::floating_point T>
T threshold_branch(const BasicPenaltySpec<T>& spec, int branch, T a)
{
    const T lam = spec.lambda();
    const T tau = spec.tau();
    if (branch == 0) return T(0);
    switch (spec.family()) {
    case Family::lasso:
        if (branch == 1) return a - lam;
        break;
    case Family::scad:
        if (branch == 1) return a - lam;
        if (branch == 2) return ((tau - T(1)) * a - lam * tau) / (tau - T(2));
        if (branch == 3) return a;
        break;
    case Family::mcp:
        if (branch == 1) return tau * (a - lam) / (tau - T(1));
        if (branch == 2) return a;
        break;
    }
    fail(ErrorCode::invalid_argument, "threshold branch index out of range");
}

/// Scalar proximal map: the unique minimizer of 1/2 (t - v)^2 + rho(t).
///
/// Boundaries belong to the inner branch, so |v| <= lambda maps to 0.
/// Odd in v, shrinks toward zero, and is the identity for |v| > lambda * tau
/// under SCAD and MCP.
template <std::floating_point T>
T threshold(const BasicPenaltySpec<T>& spec, T v)
{
    const T a = std::abs(v);
    const auto bps = threshold_breakpoints(spec);
    int branch = 0;
    while (branch < static_cast<int>(bps.size()) && a > bps[static_cast<std::size_t>(branch)]) ++branch;
    if (branch == 0) return T(0);
    const T mag = threshold_branch(spec, branch, a);
    return v > T(0) ? mag : -mag;
}

/// inf over t of min(rho''(t), 0), away from breakpoints.
template <std::floating_point T>
T concavity_floor(const BasicPenaltySpec<T>& spec) noexcept
{
    switch (spec.family()) {
    case Family::lasso: return T(0);
    case Family::scad: return T(-1) / (spec.tau() - T(1));
    case Family::mcp: return T(-1) / spec.tau();
    }
    return T(0);
}

/// Sufficient-decrease constant (1 + concavity_floor) / 2; half the strong
/// convexity modulus of the scalar subproblem.
template <std::floating_point T>
T sufficient_decrease_theta(const BasicPenaltySpec<T>& spec) noexcept
{
    return (T(1) + concavity_floor(spec)) / T(2);
}

/// Brute-force grid minimizer of 1/2 (t - v)^2 + rho(t), used to check
/// threshold() independently of its closed form.
///
/// The grid is {-half_width + k * step : k = 0..N}, N = round(2 half_width / step).
/// Since rho is even and nondecreasing in |t|, the objective is monotone on
/// each side of the segment between 0 and v, so only grid points in that
/// segment plus one neighbour on each side are scanned. The result is the
/// exact argmin over the whole grid (lowest index on ties).
template <std::floating_point T>
T prox_oracle(const BasicPenaltySpec<T>& spec, T v, T half_width, T step)
{
    if (!std::isfinite(v) || !std::isfinite(half_width) || !std::isfinite(step))
        fail(ErrorCode::invalid_argument, "prox_oracle: non-finite argument");
    if (!(step > T(0))) fail(ErrorCode::invalid_argument, "prox_oracle: step must be > 0");
    if (half_width < std::abs(v)) fail(ErrorCode::invalid_argument, "prox_oracle: half_width must cover |v|");
    const T span = T(2) * half_width / step;
    if (span > T(4e9)) fail(ErrorCode::invalid_argument, "prox_oracle: grid too fine");
    const auto last = static_cast<std::int64_t>(std::llround(span));

    auto grid_point = [&](std::int64_t k) { return -half_width + static_cast<T>(k) * step; };
    auto objective = [&](T t) { return T(0.5) * (t - v) * (t - v) + value(spec, t); };

    const T seg_lo = std::min(T(0), v);
    const T seg_hi = std::max(T(0), v);
    auto k_lo = static_cast<std::int64_t>(std::floor((seg_lo + half_width) / step)) - 1;
    auto k_hi = static_cast<std::int64_t>(std::ceil((seg_hi + half_width) / step)) + 1;
    k_lo = std::clamp<std::int64_t>(k_lo, 0, last);
    k_hi = std::clamp<std::int64_t>(k_hi, 0, last);

    std::int64_t best_k = k_lo;
    T best_f = objective(grid_point(k_lo));
    for (std::int64_t k = k_lo + 1; k <= k_hi; ++k) {
        const T f = objective(grid_point(k));
        if (f < best_f) {
            best_f = f;
            best_k = k;
        }
    }
    return grid_point(best_k);
}

/// prox_oracle with half_width = |v| + lambda * max(tau, 1).
template <std::floating_point T>
T prox_oracle(const BasicPenaltySpec<T>& spec, T v, T step)
{
    return prox_oracle(spec, v, std::abs(v) + spec.lambda() * std::max(spec.tau(), T(1)), step);
}

} // namespace cdcert
