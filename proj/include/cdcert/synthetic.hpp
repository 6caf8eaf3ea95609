#pragma once

#include <cdcert/error.hpp>
#include <cdcert/problem.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace cdcert {

/// Recipe for b = A x* + noise with a Gaussian design.
struct SyntheticSpec {
    int n = 100;
    int p = 400;
    int sparsity = 10;
    double signal_low = 1.0;
    double signal_high = 2.0;
    double noise_sigma = 0.1;
    /// Equi-correlation between design columns, in [0, 1).
    double correlation = 0.0;
    /// Replace the design by an orthonormal basis of its column space (needs n >= p).
    bool orthogonalize = false;
    std::uint64_t seed = 42;

    void validate() const
    {
        if (n < 1 || p < 1) fail(ErrorCode::invalid_argument, "n and p must be >= 1");
        if (sparsity < 0 || sparsity > p) fail(ErrorCode::invalid_argument, "sparsity must lie in [0, p]");
        if (!(signal_low >= 0.0) || !(signal_low <= signal_high) || !std::isfinite(signal_high))
            fail(ErrorCode::invalid_argument, "signal range must satisfy 0 <= low <= high < inf");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
            fail(ErrorCode::invalid_argument, "noise_sigma must be >= 0");
        if (!(correlation >= 0.0 && correlation < 1.0)) fail(ErrorCode::invalid_argument, "correlation must lie in [0, 1)");
        if (orthogonalize && n < p) fail(ErrorCode::invalid_argument, "orthogonalize requires n >= p");
    }
};

struct GeneratedProblem {
    Problem problem;
    Vector x_true; ///< on the unit-column scale of `problem`
};

namespace detail {

// Distributions are hand-rolled on top of mt19937_64, whose output sequence is
// fixed by the standard; std::*_distribution is implementation-defined.
class StableRng {
public:
    explicit StableRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t index(std::uint64_t bound) { return engine_() % bound; }

    bool coin() { return (engine_() >> 63) != 0; }

    double normal()
    {
        if (spare_) {
            const double z = *spare_;
            spare_.reset();
            return z;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

} // namespace detail

/// Draws (A, x*, noise) from `spec` and returns the normalized problem with
/// b = A x* + noise. Identical seeds give bit-identical output.
///
/// Draw order: design entries column by column, shared row factors, support
/// positions, signs and magnitudes, noise.
inline GeneratedProblem generate(const SyntheticSpec& spec)
{
    spec.validate();
    detail::StableRng rng(spec.seed);
    const Eigen::Index n = spec.n;
    const Eigen::Index p = spec.p;

    Matrix a(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) a(i, j) = rng.normal();
    if (spec.correlation > 0.0) {
        Vector shared(n);
        for (Eigen::Index i = 0; i < n; ++i) shared[i] = rng.normal();
        a = std::sqrt(1.0 - spec.correlation) * a + std::sqrt(spec.correlation) * shared * Eigen::RowVectorXd::Ones(p);
    }
    if (spec.orthogonalize) {
        Eigen::HouseholderQR<Matrix> qr(a);
        a = qr.householderQ() * Matrix::Identity(n, p);
    }
    Problem problem = normalize_columns(std::move(a), Vector::Zero(n));

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
    for (int s = 0; s < spec.sparsity; ++s) {
        const auto remaining = static_cast<std::uint64_t>(p - s);
        const auto pick = static_cast<std::size_t>(s) + static_cast<std::size_t>(rng.index(remaining));
        std::swap(idx[static_cast<std::size_t>(s)], idx[pick]);
    }
    Vector x_true = Vector::Zero(p);
    for (int s = 0; s < spec.sparsity; ++s) {
        const double sign = rng.coin() ? 1.0 : -1.0;
        const double mag = spec.signal_low + (spec.signal_high - spec.signal_low) * rng.uniform();
        x_true[idx[static_cast<std::size_t>(s)]] = sign * mag;
    }

    Vector b = problem.a() * x_true;
    if (spec.noise_sigma > 0.0)
        for (Eigen::Index i = 0; i < n; ++i) b[i] += spec.noise_sigma * rng.normal();

    return {problem.with_response(std::move(b)), std::move(x_true)};
}

} // namespace cdcert
