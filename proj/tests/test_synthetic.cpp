#include "oracles.hpp"

#include <cdcert/solver.hpp>
#include <cdcert/synthetic.hpp>

#include <catch_amalgamated.hpp>

using namespace cdcert;
using Catch::Matchers::WithinAbs;

namespace {

ErrorCode code_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected cdcert::Error");
    return ErrorCode::invalid_argument;
}

std::uint64_t checksum(const GeneratedProblem& g)
{
    std::uint64_t h = oracle::fnv1a(g.problem.a().data(), static_cast<std::size_t>(g.problem.a().size()));
    h = oracle::fnv1a(g.problem.b().data(), static_cast<std::size_t>(g.problem.b().size()), h);
    return oracle::fnv1a(g.x_true.data(), static_cast<std::size_t>(g.x_true.size()), h);
}

} // namespace

TEST_CASE("generator is deterministic", "[synthetic]")
{
    SyntheticSpec spec;
    const GeneratedProblem a = generate(spec);
    const GeneratedProblem b = generate(spec);
    CHECK(a.problem.a() == b.problem.a());
    CHECK(a.problem.b() == b.problem.b());
    CHECK(a.x_true == b.x_true);

    // Recorded from this implementation for the default n=100, p=400, s=10, seed 42.
    CHECK(checksum(a) == 0x6a912bd2b3046c77ULL);

    spec.seed = 43;
    CHECK(checksum(generate(spec)) != checksum(a));
}

TEST_CASE("generated instance shape", "[synthetic]")
{
    SyntheticSpec spec;
    spec.n = 50;
    spec.p = 120;
    spec.sparsity = 7;
    spec.correlation = 0.5;
    spec.signal_low = 1.0;
    spec.signal_high = 2.0;
    const GeneratedProblem g = generate(spec);
    for (Eigen::Index j = 0; j < 120; ++j) CHECK_THAT(g.problem.a().col(j).norm(), WithinAbs(1.0, 1e-12));
    int nonzero = 0;
    for (Eigen::Index j = 0; j < 120; ++j) {
        const double v = std::abs(g.x_true[j]);
        if (v == 0.0) continue;
        ++nonzero;
        CHECK(v >= 1.0);
        CHECK(v <= 2.0);
    }
    CHECK(nonzero == 7);

    // Equi-correlated columns: mean off-diagonal Gram entry near the target.
    const Matrix gram = g.problem.a().transpose() * g.problem.a();
    const double off = (gram.sum() - gram.trace()) / (120.0 * 119.0);
    CHECK_THAT(off, WithinAbs(0.5, 0.15));
}

TEST_CASE("noiseless empty model has zero response", "[synthetic]")
{
    SyntheticSpec spec;
    spec.n = 20;
    spec.p = 30;
    spec.sparsity = 0;
    spec.noise_sigma = 0.0;
    const GeneratedProblem g = generate(spec);
    CHECK(g.problem.b() == Vector::Zero(20));
    CHECK(g.x_true == Vector::Zero(30));
}

TEST_CASE("orthogonal design recovers the support", "[synthetic]")
{
    SyntheticSpec spec;
    spec.n = 60;
    spec.p = 60;
    spec.sparsity = 6;
    spec.orthogonalize = true;
    spec.noise_sigma = 0.01;
    const GeneratedProblem g = generate(spec);
    const Matrix gram = g.problem.a().transpose() * g.problem.a();
    CHECK((gram - Matrix::Identity(60, 60)).cwiseAbs().maxCoeff() <= 1e-12);

    const SolveResult r = solve(g.problem, PenaltySpec::mcp(0.1, 3.0));
    CHECK(r.sweeps <= 2);
    for (Eigen::Index j = 0; j < 60; ++j) CHECK((r.x_hat_normalized[j] != 0.0) == (g.x_true[j] != 0.0));
    CHECK((r.x_hat_normalized - g.x_true).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("generator validation", "[synthetic]")
{
    auto bad = [](auto mutate) {
        SyntheticSpec s;
        mutate(s);
        return code_of([&] { generate(s); });
    };
    CHECK(bad([](SyntheticSpec& s) { s.n = 0; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.sparsity = 401; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.sparsity = -1; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.signal_low = 3.0; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.noise_sigma = -1.0; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.correlation = 1.0; }) == ErrorCode::invalid_argument);
    CHECK(bad([](SyntheticSpec& s) { s.orthogonalize = true; }) == ErrorCode::invalid_argument);
}
