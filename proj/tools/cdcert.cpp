// cdcert: coordinate descent for Lasso/SCAD/MCP least squares with
// per-sweep convergence certificates.
//
// Exit codes: 0 success, 1 usage or input error, 2 solver hit --max-sweeps,
// 3 diagnose found certificate violations.

#include <cdcert/cdcert.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace cdcert;

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_max_sweeps = 2;
constexpr int exit_violations = 3;

std::optional<double> env_double(const char* name)
{
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const double d = std::strtod(v, &end);
    if (end == v || *end != '\0') fail(ErrorCode::invalid_argument, std::string(name) + " is not a number: " + v);
    return d;
}

unsigned default_threads()
{
    if (const auto t = env_double("CDCERT_THREADS")) {
        if (!(*t >= 1.0)) fail(ErrorCode::invalid_argument, "CDCERT_THREADS must be >= 1");
        return static_cast<unsigned>(*t);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct ProblemArgs {
    std::string combined;
    std::string response;
    std::string design;

    void add(CLI::App& cmd)
    {
        auto* c = cmd.add_option("--problem", combined, "CSV with b in the first column and A in the rest");
        auto* r = cmd.add_option("--response", response, "CSV holding b (one column)");
        auto* d = cmd.add_option("--design", design, "CSV holding A");
        c->excludes(r)->excludes(d);
        r->needs(d);
        d->needs(r);
    }

    bool given() const { return !combined.empty() || !response.empty(); }

    Problem load() const
    {
        if (!combined.empty()) return load_problem(combined);
        if (!response.empty()) return load_problem(response, design);
        fail(ErrorCode::invalid_argument, "one of --problem or --response/--design is required");
    }

    json echo() const
    {
        if (!combined.empty()) return {{"problem", combined}};
        return {{"response", response}, {"design", design}};
    }
};

struct PenaltyArgs {
    std::string family = "lasso";
    std::optional<double> lambda;
    std::optional<double> lambda_ratio;
    double tau = 3.0;

    void add(CLI::App& cmd, bool with_lambda)
    {
        cmd.add_option("--penalty", family, "lasso | scad | mcp")
            ->check(CLI::IsMember({"lasso", "scad", "mcp"}))
            ->capture_default_str();
        cmd.add_option("--tau", tau, "concavity parameter (SCAD > 2, MCP > 1; ignored for lasso)")->capture_default_str();
        if (with_lambda) {
            auto* l = cmd.add_option("--lambda", lambda, "regularization weight");
            auto* r = cmd.add_option("--lambda-ratio", lambda_ratio, "lambda as a fraction of lambda_max");
            l->excludes(r);
        }
    }

    Family parsed_family() const { return *parse_family(family); }

    // Throws on an invalid tau for the family without needing lambda.
    void validate() const
    {
        const double probe = lambda.value_or(1.0);
        (void)PenaltySpec(parsed_family(), probe, parsed_family() == Family::lasso ? 0.0 : tau);
        if (lambda_ratio && !(*lambda_ratio > 0.0)) fail(ErrorCode::invalid_argument, "--lambda-ratio must be > 0");
    }

    double effective_tau() const { return parsed_family() == Family::lasso ? 0.0 : tau; }
};

struct SolverArgs {
    double tol = 1e-8;
    int max_sweeps = 10000;
    bool certificates = false;
    int refresh = 100;
    std::string order = "cyclic";
    std::uint64_t shuffle_seed = 0;

    void add(CLI::App& cmd)
    {
        if (const auto t = env_double("CDCERT_TOL")) tol = *t;
        cmd.add_option("--tol", tol, "stop when the step norm is <= tol (env CDCERT_TOL)")->capture_default_str();
        cmd.add_option("--max-sweeps", max_sweeps, "sweep limit")->capture_default_str();
        cmd.add_flag("--certificates", certificates, "record H1/H2 certificates for every sweep");
        cmd.add_option("--refresh", refresh, "recompute the residual every N sweeps")->capture_default_str();
        cmd.add_option("--order", order, "cyclic | shuffled (certificates assume cyclic)")
            ->check(CLI::IsMember({"cyclic", "shuffled"}))
            ->capture_default_str();
        cmd.add_option("--shuffle-seed", shuffle_seed, "seed for shuffled order")->capture_default_str();
    }

    SolverOptions options(Eigen::Index p) const
    {
        SolverOptions o;
        o.tol = tol;
        o.max_sweeps = max_sweeps;
        o.collect_certificates = certificates;
        o.residual_refresh_period = refresh;
        o.order = order == "cyclic" ? SweepOrder::cyclic : SweepOrder::shuffled;
        o.shuffle_seed = shuffle_seed;
        o.validate(p);
        return o;
    }
};

void emit(const std::string& out_path, const std::string& text)
{
    if (out_path.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        detail::write_file(out_path, text);
    }
}

// ---------------------------------------------------------------- gen

struct GenCommand {
    SyntheticSpec spec;
    std::string out;
    std::string truth;

    void add(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("gen", "generate a synthetic instance b = A x* + noise");
        cmd->add_option("--n", spec.n, "samples")->capture_default_str();
        cmd->add_option("--p", spec.p, "features")->capture_default_str();
        cmd->add_option("--sparsity", spec.sparsity, "nonzeros in x*")->capture_default_str();
        cmd->add_option("--signal-low", spec.signal_low, "smallest |x*_i|")->capture_default_str();
        cmd->add_option("--signal-high", spec.signal_high, "largest |x*_i|")->capture_default_str();
        cmd->add_option("--noise", spec.noise_sigma, "noise standard deviation")->capture_default_str();
        cmd->add_option("--correlation", spec.correlation, "equi-correlation of design columns")->capture_default_str();
        cmd->add_flag("--orthogonalize", spec.orthogonalize, "orthonormal design (needs n >= p)");
        cmd->add_option("--seed", spec.seed, "random seed")->capture_default_str();
        cmd->add_option("--out", out, "problem CSV path (default stdout)");
        cmd->add_option("--truth", truth, "write generator recipe and x* as JSON here");
        cmd->callback([this] { run(); });
    }

    int code = exit_ok;

    void run()
    {
        spec.validate();
        const GeneratedProblem gen = generate(spec);
        emit(out, problem_to_csv(gen.problem));
        if (!truth.empty()) {
            json doc = instance_to_json(spec, gen);
            doc["config"] = {{"command", "gen"}, {"out", out}};
            detail::write_file(truth, doc.dump(2) + "\n");
        }
        std::cerr << "generated n=" << spec.n << " p=" << spec.p << " sparsity=" << spec.sparsity << "\n";
    }
};

// ---------------------------------------------------------------- fit

struct FitCommand {
    ProblemArgs problem;
    PenaltyArgs penalty;
    SolverArgs solver;
    std::string out;
    int code = exit_ok;

    void add(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("fit", "solve one penalized least-squares problem");
        problem.add(*cmd);
        penalty.add(*cmd, true);
        solver.add(*cmd);
        cmd->add_option("--out", out, "result JSON path (default stdout)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        penalty.validate();
        if (!penalty.lambda && !penalty.lambda_ratio) fail(ErrorCode::invalid_argument, "--lambda or --lambda-ratio is required");
        const Problem prob = problem.load();
        const SolverOptions opts = solver.options(prob.cols());
        const double lmax = lambda_max(prob);
        const double lam = penalty.lambda ? *penalty.lambda : *penalty.lambda_ratio * lmax;
        const PenaltySpec spec(penalty.parsed_family(), lam, penalty.effective_tau());

        const SolveResult result = solve(prob, spec, opts);
        json doc = to_json(result);
        json config = problem.echo();
        config["command"] = "fit";
        config["penalty"] = to_json(spec);
        config["options"] = to_json(opts);
        config["lambda_max"] = lmax;
        if (penalty.lambda_ratio) config["lambda_ratio"] = *penalty.lambda_ratio;
        doc["config"] = std::move(config);
        doc["support_size"] = result.support_size();
        emit(out, doc.dump(2) + "\n");

        std::cerr << to_string(result.status) << " after " << result.sweeps << " sweeps, F = " << result.objective
                  << ", stationarity gap = " << result.stationarity_gap << "\n";
        code = result.status == SolveStatus::converged ? exit_ok : exit_max_sweeps;
    }
};

// ---------------------------------------------------------------- path

struct PathCommand {
    ProblemArgs problem;
    PenaltyArgs penalty;
    SolverArgs solver;
    std::vector<double> lambdas;
    int n_lambdas = 20;
    double min_ratio = 0.05;
    std::string out;
    int code = exit_ok;

    void add(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("path", "warm-started regularization path");
        problem.add(*cmd);
        penalty.add(*cmd, false);
        solver.add(*cmd);
        cmd->add_option("--lambdas", lambdas, "explicit descending lambda grid")->delimiter(',');
        cmd->add_option("--n-lambdas", n_lambdas, "geometric grid size from lambda_max")->capture_default_str();
        cmd->add_option("--lambda-min-ratio", min_ratio, "smallest lambda / lambda_max")->capture_default_str();
        cmd->add_option("--out", out, "path JSON (default stdout)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        penalty.validate();
        const Problem prob = problem.load();
        const SolverOptions opts = solver.options(prob.cols());
        const double lmax = lambda_max(prob);
        const std::vector<double> grid = lambdas.empty() ? geometric_lambda_grid(lmax, min_ratio, n_lambdas) : lambdas;
        const auto path = regularization_path(prob, penalty.parsed_family(), penalty.effective_tau(), grid, opts);

        json points = json::array();
        bool all_converged = true;
        for (const auto& pt : path) {
            all_converged = all_converged && pt.result.status == SolveStatus::converged;
            points.push_back({{"lambda", pt.lambda},
                              {"support_size", pt.support_size},
                              {"status", to_string(pt.result.status)},
                              {"sweeps", pt.result.sweeps},
                              {"objective", pt.result.objective},
                              {"stationarity_gap", pt.result.stationarity_gap},
                              {"x_hat", detail::vector_to_json(pt.result.x_hat)},
                              {"x_hat_normalized", detail::vector_to_json(pt.result.x_hat_normalized)}});
        }
        const auto shrinks = support_shrinks(path);
        for (const auto i : shrinks)
            std::cerr << "note: support shrank from " << path[i - 1].support_size << " to " << path[i].support_size
                      << " at lambda " << path[i].lambda << "\n";

        json config = problem.echo();
        config["command"] = "path";
        config["family"] = penalty.family;
        config["tau"] = penalty.effective_tau();
        config["options"] = to_json(opts);
        config["lambdas"] = grid;
        json doc = {{"schema", "cdcert.path"},
                    {"version", schema_version},
                    {"config", std::move(config)},
                    {"lambda_max", lmax},
                    {"points", std::move(points)},
                    {"support_shrinks", shrinks}};
        emit(out, doc.dump(2) + "\n");
        code = all_converged ? exit_ok : exit_max_sweeps;
    }
};

// ---------------------------------------------------------------- diagnose

struct DiagnoseCommand {
    std::string result_path;
    ProblemArgs problem;
    unsigned threads = 0;
    double tail_fraction = 0.5;
    std::string out;
    int code = exit_ok;

    void add(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("diagnose", "re-check the certificates of a stored result");
        cmd->add_option("--result", result_path, "result JSON written by fit")->required();
        problem.add(*cmd);
        cmd->add_option("--threads", threads, "workers for certificate recomputation (env CDCERT_THREADS)");
        cmd->add_option("--tail-fraction", tail_fraction, "trace tail used for the rate fit")->capture_default_str();
        cmd->add_option("--out", out, "report JSON (default stdout)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        const SolveResult stored = load_result(result_path);
        const unsigned workers = threads > 0 ? threads : default_threads();
        const AuditReport report = problem.given() ? audit_trace(stored, problem.load(), workers) : audit_trace(stored);

        json violations = json::array();
        for (const auto& v : report.violations) {
            violations.push_back({{"sweep", v.sweep}, {"kind", v.kind}, {"detail", v.detail}});
            std::cerr << "violation at sweep " << v.sweep << " [" << v.kind << "]: " << v.detail << "\n";
        }
        const auto steps = stored.trace.step_norms();
        const FiniteLength fl = finite_length(steps);
        json rate = nullptr;
        try {
            const RateEstimate est = estimate_rate(steps, tail_fraction);
            rate = {{"nu_hat", est.nu_hat},
                    {"eta_hat", est.eta_hat},
                    {"r_squared", est.r_squared},
                    {"window", {est.window_first, est.window_last}},
                    {"points", est.points},
                    {"conclusive", est.conclusive()}};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::insufficient_data) throw;
            std::cerr << "rate: " << e.what() << "\n";
        }

        json config = problem.given() ? problem.echo() : json::object();
        config["command"] = "diagnose";
        config["result"] = result_path;
        config["tail_fraction"] = tail_fraction;
        json doc = {{"schema", "cdcert.audit"},
                    {"version", schema_version},
                    {"config", std::move(config)},
                    {"ok", report.ok()},
                    {"sweeps_checked", report.sweeps_checked},
                    {"replayed", report.replayed},
                    {"violations", std::move(violations)},
                    {"finite_length",
                     {{"total", fl.total}, {"tail_ratio", fl.tail_ratio}, {"window_ratio", fl.window_ratio}}},
                    {"rate", std::move(rate)}};
        emit(out, doc.dump(2) + "\n");
        code = report.ok() ? exit_ok : exit_violations;
    }
};

// ---------------------------------------------------------------- curves

struct CurvesCommand {
    PenaltyArgs penalty;
    double lambda = 1.0;
    double from = -3.0;
    double to = 3.0;
    int points = 601;
    std::string out;
    int code = exit_ok;

    void add(CLI::App& app)
    {
        auto* cmd = app.add_subcommand("curves", "sample penalty, derivative and threshold as CSV");
        penalty.add(*cmd, false);
        cmd->add_option("--lambda", lambda, "regularization weight")->capture_default_str();
        cmd->add_option("--from", from, "range start")->capture_default_str();
        cmd->add_option("--to", to, "range end")->capture_default_str();
        cmd->add_option("--points", points, "number of samples")->capture_default_str();
        cmd->add_option("--out", out, "CSV path (default stdout)");
        cmd->callback([this] { run(); });
    }

    void run()
    {
        const PenaltySpec spec(penalty.parsed_family(), lambda, penalty.effective_tau());
        if (points < 1) fail(ErrorCode::invalid_argument, "--points must be >= 1");
        if (!std::isfinite(from) || !std::isfinite(to) || to < from || (points > 1 && to == from))
            fail(ErrorCode::invalid_argument, "invalid sampling range");
        std::string csv = "t,rho,drho,threshold\n";
        for (int i = 0; i < points; ++i) {
            const double t = points == 1 ? from : from + (to - from) * i / (points - 1);
            csv += format_double(t) + ',' + format_double(value(spec, t)) + ',';
            if (t != 0.0) csv += format_double(derivative(spec, t));
            csv += ',' + format_double(threshold(spec, t)) + '\n';
        }
        emit(out, csv);
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coordinate descent for Lasso/SCAD/MCP penalized least squares with convergence certificates"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 usage/input error, 2 max sweeps reached, 3 certificate violations.\n"
               "Environment: CDCERT_TOL overrides the default --tol; CDCERT_THREADS sets diagnose workers.");

    GenCommand gen;
    FitCommand fit;
    PathCommand path;
    DiagnoseCommand diagnose;
    CurvesCommand curves;
    try {
        gen.add(app);
        fit.add(app);
        path.add(app);
        diagnose.add(app);
        curves.add(app);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_input;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    }

    for (const int rc : {gen.code, fit.code, path.code, diagnose.code, curves.code})
        if (rc != exit_ok) return rc;
    return exit_ok;
}
