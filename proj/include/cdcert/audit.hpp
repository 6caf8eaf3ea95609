#pragma once

// Offline re-check of a stored solve: the inequalities recorded in the trace
// are re-verified, and when the problem is available the run is replayed and
// every certificate recomputed from the replayed iterates.

#include <cdcert/diagnostics.hpp>
#include <cdcert/solver.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace cdcert {

struct Violation {
    int sweep = 0; ///< 0 for run-level problems
    std::string kind;
    std::string detail;
};

struct AuditReport {
    int sweeps_checked = 0;
    bool replayed = false;
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

namespace detail {

inline bool close(double a, double b, double rel, double abs_tol)
{
    if (std::isnan(a) || std::isnan(b)) return false;
    return std::abs(a - b) <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void check_certificate(const SweepCertificate& c, const std::string& origin, std::vector<Violation>& out)
{
    if (!c.h1_ok)
        out.push_back({c.sweep, "h1", origin + "delta_f " + num(c.delta_f) + " < theta*|dx|^2 " + num(c.theta * c.step_norm_sq)});
    if (!c.h2_ok) out.push_back({c.sweep, "h2", origin + "|d| " + num(c.d_norm) + " > p*|dx| " + num(c.d_bound)});
    if (!c.h2_tight_ok) out.push_back({c.sweep, "h2_tight", origin + "per-coordinate witness bound violated"});
    if (!(c.d_membership_gap <= membership_tolerance))
        out.push_back({c.sweep, "membership", origin + "witness off the subdifferential by " + num(c.d_membership_gap)});
}

} // namespace detail

/// Re-verifies the stored trace of `stored`. Every violated inequality or
/// internal inconsistency is reported with its sweep index.
inline AuditReport audit_trace(const SolveResult& stored)
{
    AuditReport report;
    auto& out = report.violations;
    const auto& sweeps = stored.trace.sweeps;
    const double theta = sufficient_decrease_theta(stored.penalty);
    const auto p = static_cast<double>(stored.x_hat_normalized.size());

    if (!detail::close(stored.trace.theta, theta, 1e-12, 0.0))
        out.push_back({0, "theta", "stored theta " + detail::num(stored.trace.theta) + " != " + detail::num(theta)});
    if (static_cast<int>(sweeps.size()) != stored.sweeps)
        out.push_back({0, "sweep_count", "trace has " + std::to_string(sweeps.size()) + " entries, result reports " +
                                             std::to_string(stored.sweeps)});

    double f_prev = stored.trace.initial_objective;
    for (std::size_t idx = 0; idx < sweeps.size(); ++idx) {
        const SweepRecord& rec = sweeps[idx];
        const int k = rec.sweep;
        if (k != static_cast<int>(idx) + 1)
            out.push_back({k, "numbering", "expected sweep " + std::to_string(idx + 1)});

        const double delta = f_prev - rec.objective;
        if (!detail::close(delta, rec.h1_lhs, 1e-12, 1e-12 * (1.0 + std::abs(f_prev))))
            out.push_back({k, "h1_lhs", "stored decrease " + detail::num(rec.h1_lhs) + " != F(x^{k-1}) - F(x^k) = " +
                                            detail::num(delta)});
        const double rhs = theta * rec.step_norm * rec.step_norm;
        if (!detail::close(rhs, rec.h1_rhs, 1e-9, 1e-300))
            out.push_back({k, "h1_rhs", "stored theta*|dx|^2 " + detail::num(rec.h1_rhs) + " != " + detail::num(rhs)});
        if (!(rec.h1_lhs >= rec.h1_rhs - certificate_slack))
            out.push_back({k, "h1", "decrease " + detail::num(rec.h1_lhs) + " < theta*|dx|^2 " + detail::num(rec.h1_rhs)});

        if (rec.certificate) {
            const SweepCertificate& c = *rec.certificate;
            if (!(c.d_norm <= p * rec.step_norm + certificate_slack))
                out.push_back({k, "h2", "|d| " + detail::num(c.d_norm) + " > p*|dx| " + detail::num(p * rec.step_norm)});
            detail::check_certificate(c, "", out);
        }
        f_prev = rec.objective;
    }

    if (stored.status == SolveStatus::converged && !sweeps.empty() && !(sweeps.back().step_norm <= stored.options.tol))
        out.push_back({sweeps.back().sweep, "status", "marked converged but last step exceeds tol"});

    report.sweeps_checked = static_cast<int>(sweeps.size());
    return report;
}

/// Recomputes certificates for every sweep of a trace that kept its
/// iterates, splitting sweeps across `threads` workers.
inline std::vector<SweepCertificate> certify_trace(const Problem& problem, const PenaltySpec& spec,
                                                   const SolveTrace& trace, unsigned threads = 1)
{
    const std::size_t count = trace.sweeps.size();
    if (trace.iterates.size() != count + 1)
        fail(ErrorCode::invalid_argument, "certify_trace needs the iterates of every sweep");
    std::vector<SweepCertificate> certs(count);
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t k = first; k < count; k += stride) {
            const double f_prev = k == 0 ? trace.initial_objective : trace.sweeps[k - 1].objective;
            const std::span<const Eigen::Index> order =
                trace.orders.empty() ? std::span<const Eigen::Index>{} : std::span<const Eigen::Index>(trace.orders[k]);
            certs[k] = certify_sweep(problem, spec, static_cast<int>(k) + 1, trace.iterates[k], trace.iterates[k + 1],
                                     f_prev, trace.sweeps[k].objective, order);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || count < 2) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    return certs;
}

/// audit_trace plus a replay of the run on `problem` with the stored
/// penalty and options; replayed objectives and step norms must match the
/// stored ones and every recomputed certificate must hold.
inline AuditReport audit_trace(const SolveResult& stored, const Problem& problem, unsigned threads = 1)
{
    AuditReport report = audit_trace(stored);
    auto& out = report.violations;
    if (stored.x_hat_normalized.size() != problem.cols()) {
        out.push_back({0, "dimension", "stored result has " + std::to_string(stored.x_hat_normalized.size()) +
                                           " coefficients, problem has " + std::to_string(problem.cols())});
        return report;
    }

    SolverOptions opts = stored.options;
    opts.collect_certificates = false;
    opts.keep_iterates = true;
    const SolveResult replay = solve(problem, stored.penalty, opts);
    report.replayed = true;

    const auto& a = stored.trace.sweeps;
    const auto& b = replay.trace.sweeps;
    if (a.size() != b.size())
        out.push_back({0, "replay", "replay ran " + std::to_string(b.size()) + " sweeps, stored trace has " +
                                        std::to_string(a.size())});
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        if (!detail::close(a[k].objective, b[k].objective, 1e-9, 1e-12))
            out.push_back({a[k].sweep, "replay", "objective " + detail::num(a[k].objective) + " != replayed " +
                                                     detail::num(b[k].objective)});
        if (!detail::close(a[k].step_norm, b[k].step_norm, 1e-9, 1e-12))
            out.push_back({a[k].sweep, "replay", "step norm " + detail::num(a[k].step_norm) + " != replayed " +
                                                     detail::num(b[k].step_norm)});
    }

    const auto certs = certify_trace(problem, stored.penalty, replay.trace, threads);
    for (std::size_t k = 0; k < certs.size(); ++k) {
        detail::check_certificate(certs[k], "replay: ", out);
        if (k < a.size() && a[k].certificate && !detail::close(a[k].certificate->d_norm, certs[k].d_norm, 1e-6, 1e-12))
            out.push_back({certs[k].sweep, "replay", "stored |d| " + detail::num(a[k].certificate->d_norm) +
                                                         " != recomputed " + detail::num(certs[k].d_norm)});
    }
    std::stable_sort(out.begin(), out.end(), [](const Violation& l, const Violation& r) { return l.sweep < r.sweep; });
    return report;
}

} // namespace cdcert
