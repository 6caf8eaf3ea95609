#include <cdcert/io.hpp>
#include <cdcert/solver.hpp>
#include <cdcert/synthetic.hpp>

#include <catch_amalgamated.hpp>

#include <bit>
#include <filesystem>
#include <random>
#include <string>

using namespace cdcert;
namespace fs = std::filesystem;

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

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("cdcert_io_" + std::to_string(Catch::getSeed()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

void write(const fs::path& p, const std::string& text)
{
    detail::write_file(p, text);
}

void check_same(const SolveResult& a, const SolveResult& b)
{
    CHECK(a.penalty == b.penalty);
    CHECK(a.options.max_sweeps == b.options.max_sweeps);
    CHECK(a.options.tol == b.options.tol);
    CHECK(a.options.collect_certificates == b.options.collect_certificates);
    CHECK(a.options.residual_refresh_period == b.options.residual_refresh_period);
    CHECK(a.options.order == b.options.order);
    CHECK(a.options.shuffle_seed == b.options.shuffle_seed);
    CHECK(a.options.init.has_value() == b.options.init.has_value());
    if (a.options.init && b.options.init) CHECK(*a.options.init == *b.options.init);
    CHECK(a.x_hat == b.x_hat);
    CHECK(a.x_hat_normalized == b.x_hat_normalized);
    CHECK(a.status == b.status);
    CHECK(a.sweeps == b.sweeps);
    CHECK(a.objective == b.objective);
    CHECK(a.stationarity_gap == b.stationarity_gap);
    CHECK(a.iterate_norm_max == b.iterate_norm_max);
    CHECK(a.trace.theta == b.trace.theta);
    CHECK(a.trace.initial_objective == b.trace.initial_objective);
    REQUIRE(a.trace.sweeps.size() == b.trace.sweeps.size());
    for (std::size_t k = 0; k < a.trace.sweeps.size(); ++k) {
        const auto& x = a.trace.sweeps[k];
        const auto& y = b.trace.sweeps[k];
        CHECK(x.sweep == y.sweep);
        CHECK(x.objective == y.objective);
        CHECK(x.step_norm == y.step_norm);
        CHECK(x.h1_lhs == y.h1_lhs);
        CHECK(x.h1_rhs == y.h1_rhs);
        REQUIRE(x.certificate.has_value() == y.certificate.has_value());
        if (x.certificate) {
            CHECK(x.certificate->delta_f == y.certificate->delta_f);
            CHECK(x.certificate->step_norm_sq == y.certificate->step_norm_sq);
            CHECK(x.certificate->theta == y.certificate->theta);
            CHECK(x.certificate->h1_ok == y.certificate->h1_ok);
            CHECK(x.certificate->d_norm == y.certificate->d_norm);
            CHECK(x.certificate->d_bound == y.certificate->d_bound);
            CHECK(x.certificate->h2_ok == y.certificate->h2_ok);
            CHECK(x.certificate->h2_tight_ok == y.certificate->h2_tight_ok);
            CHECK(x.certificate->d_membership_gap == y.certificate->d_membership_gap);
        }
    }
}

} // namespace

TEST_CASE("CSV parsing", "[io]")
{
    SECTION("header is detected")
    {
        const Matrix with = parse_csv("b,a1\n1,2\n3,4\n");
        const Matrix without = parse_csv("1,2\n3,4");
        CHECK(with == without);
        CHECK(with.rows() == 2);
        CHECK(with(1, 1) == 4.0);
    }
    SECTION("whitespace, CRLF, blank lines and exponents")
    {
        const Matrix m = parse_csv(" 1.5 , -2e-3\r\n\r\n+3,4\r\n");
        CHECK(m(0, 0) == 1.5);
        CHECK(m(0, 1) == -2e-3);
        CHECK(m(1, 0) == 3.0);
    }
    SECTION("ragged row names the row")
    {
        try {
            parse_csv("x,y,z\n1,2,3\n4,5\n", "data.csv");
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse);
            CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("row 3"));
        }
    }
    SECTION("non-numeric data")
    {
        CHECK(code_of([] { parse_csv("1,2\n3,abc\n"); }) == ErrorCode::parse);
        CHECK(code_of([] { parse_csv("b,a\n"); }) == ErrorCode::parse);
        CHECK(code_of([] { parse_csv(""); }) == ErrorCode::parse);
    }
}

TEST_CASE("problem files", "[io]")
{
    TempDir dir;

    SECTION("zero feature column")
    {
        write(dir / "z.csv", "b,a1,a2\n1,0,1\n2,0,3\n");
        CHECK(code_of([&] { load_problem(dir / "z.csv"); }) == ErrorCode::zero_column);
    }
    SECTION("non-finite entry")
    {
        write(dir / "n.csv", "1,nan\n2,3\n");
        CHECK(code_of([&] { load_problem(dir / "n.csv"); }) == ErrorCode::non_finite);
    }
    SECTION("missing file")
    {
        CHECK(code_of([&] { load_problem(dir / "absent.csv"); }) == ErrorCode::io);
    }
    SECTION("response only")
    {
        write(dir / "b.csv", "1\n2\n");
        CHECK(code_of([&] { load_problem(dir / "b.csv"); }) == ErrorCode::dimension_mismatch);
    }
    SECTION("pair of files")
    {
        write(dir / "b.csv", "b\n1\n2\n");
        write(dir / "a.csv", "a1,a2\n3,0\n4,2\n");
        const Problem prob = load_problem(dir / "b.csv", dir / "a.csv");
        CHECK(prob.column_scales()[0] == 5.0);
        CHECK(prob.column_scales()[1] == 2.0);
        CHECK(prob.b()[1] == 2.0);
        write(dir / "a3.csv", "3,0\n4,2\n1,1\n");
        CHECK(code_of([&] { load_problem(dir / "b.csv", dir / "a3.csv"); }) == ErrorCode::dimension_mismatch);
        write(dir / "b2.csv", "1,1\n2,2\n");
        CHECK(code_of([&] { load_problem(dir / "b2.csv", dir / "a.csv"); }) == ErrorCode::dimension_mismatch);
    }
    SECTION("generated instance round trip")
    {
        SyntheticSpec spec;
        spec.n = 30;
        spec.p = 50;
        spec.sparsity = 5;
        spec.correlation = 0.4;
        const GeneratedProblem gen = generate(spec);
        save_problem(gen.problem, dir / "g.csv");
        const Problem back = load_problem(dir / "g.csv");
        CHECK((back.a() - gen.problem.a()).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(back.b() == gen.problem.b());
    }
}

TEST_CASE("result JSON round trip", "[io]")
{
    TempDir dir;
    SyntheticSpec spec;
    spec.n = 40;
    spec.p = 80;
    spec.sparsity = 4;
    spec.correlation = 0.3;
    const GeneratedProblem gen = generate(spec);
    const double lmax = lambda_max(gen.problem);

    for (const bool certs : {false, true}) {
        for (const auto& pen : {PenaltySpec::mcp(0.2 * lmax, 2.5), PenaltySpec::scad(0.3 * lmax, 3.7),
                                PenaltySpec::lasso(0.1 * lmax)}) {
            SolverOptions opts;
            opts.collect_certificates = certs;
            opts.tol = 1e-10;
            if (pen.family() == Family::scad) opts.init = Vector::Constant(spec.p, 0.01);
            const SolveResult r = solve(gen.problem, pen, opts);
            save_result(r, dir / "r.json");
            const SolveResult back = load_result(dir / "r.json");
            check_same(r, back);
            CHECK(load_trace(dir / "r.json").sweeps.size() == r.trace.sweeps.size());

            const json j = to_json(r);
            const auto& first = j.at("trace").at(0);
            for (const char* key : {"sweep", "objective", "step_norm", "h1_lhs", "h1_rhs", "d_norm", "d_bound"})
                CHECK(first.contains(key));
            CHECK(first.at("d_norm").is_null() == !certs);
        }
    }
}

TEST_CASE("result JSON errors", "[io]")
{
    TempDir dir;
    const Problem prob = normalize_columns(Matrix::Identity(2, 2), Vector::Ones(2));
    const SolveResult r = solve(prob, PenaltySpec::lasso(0.5));
    const std::string text = to_json(r).dump();

    write(dir / "trunc.json", text.substr(0, text.size() / 2));
    CHECK(code_of([&] { load_result(dir / "trunc.json"); }) == ErrorCode::schema);

    json wrong_version = to_json(r);
    wrong_version["version"] = 2;
    write(dir / "v2.json", wrong_version.dump());
    CHECK(code_of([&] { load_result(dir / "v2.json"); }) == ErrorCode::unsupported_version);

    json wrong_schema = to_json(r);
    wrong_schema["schema"] = "something.else";
    write(dir / "other.json", wrong_schema.dump());
    CHECK(code_of([&] { load_result(dir / "other.json"); }) == ErrorCode::schema);

    json missing = to_json(r);
    missing.erase("x_hat");
    write(dir / "missing.json", missing.dump());
    CHECK(code_of([&] { load_result(dir / "missing.json"); }) == ErrorCode::schema);

    json bad_status = to_json(r);
    bad_status["status"] = "sort of";
    write(dir / "status.json", bad_status.dump());
    CHECK(code_of([&] { load_result(dir / "status.json"); }) == ErrorCode::schema);

    CHECK(code_of([&] { load_result(dir / "nope.json"); }) == ErrorCode::io);
}

TEST_CASE("synthetic spec JSON", "[io]")
{
    SyntheticSpec s;
    s.seed = 123456789012345ULL;
    s.correlation = 0.25;
    s.orthogonalize = false;
    const SyntheticSpec back = synthetic_spec_from_json(to_json(s));
    CHECK(back.seed == s.seed);
    CHECK(back.correlation == s.correlation);
    CHECK(back.n == s.n);
    json bad = to_json(s);
    bad["sparsity"] = -1;
    CHECK(code_of([&] { synthetic_spec_from_json(bad); }) == ErrorCode::invalid_argument);
}

TEST_CASE("format_double is lossless", "[io]")
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 2000; ++k) {
        const double v = std::bit_cast<double>(rng());
        if (!std::isfinite(v)) continue;
        const auto parsed = detail::parse_number(format_double(v));
        REQUIRE(parsed.has_value());
        CHECK(std::bit_cast<std::uint64_t>(*parsed) == std::bit_cast<std::uint64_t>(v));
    }
}
