#pragma once

// File formats:
//   problems  CSV, first column b and the remaining columns A, or separate
//             b / A files. A header row is detected when any field of the
//             first non-empty line is not a number.
//   results   JSON, schema "cdcert.result" version 1.
//   instances JSON, schema "cdcert.instance" version 1 (generator recipe
//             plus ground truth).
// Floats are written in shortest round-trip form, so every format is lossless.

#include <cdcert/error.hpp>
#include <cdcert/penalty.hpp>
#include <cdcert/problem.hpp>
#include <cdcert/solver.hpp>
#include <cdcert/synthetic.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <limits>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace cdcert {

using json = nlohmann::json;

inline constexpr std::string_view result_schema = "cdcert.result";
inline constexpr std::string_view instance_schema = "cdcert.instance";
inline constexpr int schema_version = 1;

// ---------------------------------------------------------------- CSV

inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view field)
{
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

} // namespace detail

/// Rectangular numeric table parsed from CSV text. `source` names the input
/// in error messages; row numbers in errors are 1-based file lines.
inline Matrix parse_csv(std::string_view text, const std::string& source = "<csv>")
{
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    bool first_content = true;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (detail::trim(line).empty()) continue;

        const auto fields = detail::split_fields(line);
        std::vector<double> row;
        row.reserve(fields.size());
        bool numeric = true;
        for (const auto f : fields) {
            const auto v = detail::parse_number(f);
            if (!v) {
                numeric = false;
                break;
            }
            row.push_back(*v);
        }
        if (first_content) {
            first_content = false;
            width = fields.size();
            if (!numeric) continue; // header
        }
        if (fields.size() != width)
            fail(ErrorCode::parse, source + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(width));
        if (!numeric) fail(ErrorCode::parse, source + ": row " + std::to_string(line_no) + " has a non-numeric field");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorCode::parse, source + ": no data rows");

    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline Matrix read_csv(const std::filesystem::path& path)
{
    return parse_csv(detail::read_file(path), path.string());
}

/// Combined file: column 0 is b, columns 1.. are A.
inline Problem load_problem(const std::filesystem::path& combined)
{
    const Matrix m = read_csv(combined);
    if (m.cols() < 2) fail(ErrorCode::dimension_mismatch, combined.string() + ": need a response column and >= 1 feature");
    return normalize_columns(m.rightCols(m.cols() - 1), m.col(0));
}

inline Problem load_problem(const std::filesystem::path& b_path, const std::filesystem::path& a_path)
{
    const Matrix b = read_csv(b_path);
    const Matrix a = read_csv(a_path);
    if (b.cols() != 1) fail(ErrorCode::dimension_mismatch, b_path.string() + ": response file must have one column");
    if (b.rows() != a.rows())
        fail(ErrorCode::dimension_mismatch, "response has " + std::to_string(b.rows()) + " rows, design has " +
                                                std::to_string(a.rows()));
    return normalize_columns(a, b.col(0));
}

inline std::string problem_to_csv(const Problem& problem)
{
    std::string out = "b";
    for (Eigen::Index j = 0; j < problem.cols(); ++j) out += ",a" + std::to_string(j + 1);
    out += '\n';
    for (Eigen::Index i = 0; i < problem.rows(); ++i) {
        out += format_double(problem.b()[i]);
        for (Eigen::Index j = 0; j < problem.cols(); ++j) {
            out += ',';
            out += format_double(problem.a()(i, j));
        }
        out += '\n';
    }
    return out;
}

/// Writes the normalized design; column scales are not part of the CSV.
inline void save_problem(const Problem& problem, const std::filesystem::path& path)
{
    detail::write_file(path, problem_to_csv(problem));
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline json vector_to_json(const Vector& v)
{
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Vector vector_from_json(const json& j)
{
    if (!j.is_array()) fail(ErrorCode::schema, "expected a numeric array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(ErrorCode::schema, "non-numeric array entry");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

// Non-finite doubles come back from JSON as null.
inline double number_or_nan(const json& j)
{
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <typename F>
auto with_schema_errors(F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::schema, std::string("malformed document: ") + e.what());
    }
}

inline void check_header(const json& doc, std::string_view schema)
{
    if (!doc.is_object() || !doc.contains("schema") || !doc.at("schema").is_string() ||
        doc.at("schema").get<std::string>() != schema)
        fail(ErrorCode::schema, "expected a document with schema \"" + std::string(schema) + "\"");
    if (!doc.contains("version") || !doc.at("version").is_number_integer())
        fail(ErrorCode::schema, "missing schema version");
    const int version = doc.at("version").get<int>();
    if (version != schema_version)
        fail(ErrorCode::unsupported_version, "unsupported " + std::string(schema) + " version " + std::to_string(version));
}

} // namespace detail

inline json to_json(const PenaltySpec& spec)
{
    return {{"family", to_string(spec.family())}, {"lambda", spec.lambda()}, {"tau", spec.tau()}};
}

/// Parses {"family", "lambda", "tau"}; tau may be omitted for Lasso. The
/// PenaltySpec constructor enforces the tau ranges.
inline PenaltySpec penalty_from_json(const json& j)
{
    return detail::with_schema_errors([&] {
        const auto family = parse_family(j.at("family").get<std::string>());
        if (!family) fail(ErrorCode::schema, "unknown penalty family " + j.at("family").dump());
        const double tau = j.contains("tau") ? j.at("tau").get<double>() : 0.0;
        return PenaltySpec(*family, j.at("lambda").get<double>(), tau);
    });
}

inline json to_json(const SolverOptions& o)
{
    return {{"max_sweeps", o.max_sweeps},
            {"tol", o.tol},
            {"init", o.init ? detail::vector_to_json(*o.init) : json(nullptr)},
            {"collect_certificates", o.collect_certificates},
            {"residual_refresh_period", o.residual_refresh_period},
            {"order", to_string(o.order)},
            {"shuffle_seed", o.shuffle_seed}};
}

inline SolverOptions options_from_json(const json& j)
{
    return detail::with_schema_errors([&] {
        SolverOptions o;
        o.max_sweeps = j.at("max_sweeps").get<int>();
        o.tol = j.at("tol").get<double>();
        if (!j.at("init").is_null()) o.init = detail::vector_from_json(j.at("init"));
        o.collect_certificates = j.at("collect_certificates").get<bool>();
        o.residual_refresh_period = j.at("residual_refresh_period").get<int>();
        const auto order = j.at("order").get<std::string>();
        if (order == "cyclic")
            o.order = SweepOrder::cyclic;
        else if (order == "shuffled")
            o.order = SweepOrder::shuffled;
        else
            fail(ErrorCode::schema, "unknown sweep order " + order);
        o.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
        return o;
    });
}

inline json to_json(const SweepCertificate& c)
{
    return {{"sweep", c.sweep},
            {"delta_f", c.delta_f},
            {"step_norm_sq", c.step_norm_sq},
            {"theta", c.theta},
            {"h1_ok", c.h1_ok},
            {"d_norm", c.d_norm},
            {"d_bound", c.d_bound},
            {"h2_ok", c.h2_ok},
            {"h2_tight_ok", c.h2_tight_ok},
            {"d_membership_gap", c.d_membership_gap}};
}

inline SweepCertificate certificate_from_json(const json& j)
{
    SweepCertificate c;
    c.sweep = j.at("sweep").get<int>();
    c.delta_f = detail::number_or_nan(j.at("delta_f"));
    c.step_norm_sq = detail::number_or_nan(j.at("step_norm_sq"));
    c.theta = j.at("theta").get<double>();
    c.h1_ok = j.at("h1_ok").get<bool>();
    c.d_norm = detail::number_or_nan(j.at("d_norm"));
    c.d_bound = detail::number_or_nan(j.at("d_bound"));
    c.h2_ok = j.at("h2_ok").get<bool>();
    c.h2_tight_ok = j.at("h2_tight_ok").get<bool>();
    c.d_membership_gap = detail::number_or_nan(j.at("d_membership_gap"));
    return c;
}

/// Trace entries carry {sweep, objective, step_norm, h1_lhs, h1_rhs, d_norm,
/// d_bound}; d_norm and d_bound are null unless certificates were collected,
/// in which case the full certificate is nested under "certificate".
inline json to_json(const SweepRecord& r)
{
    json j = {{"sweep", r.sweep},
              {"objective", r.objective},
              {"step_norm", r.step_norm},
              {"h1_lhs", r.h1_lhs},
              {"h1_rhs", r.h1_rhs},
              {"d_norm", r.certificate ? json(r.certificate->d_norm) : json(nullptr)},
              {"d_bound", r.certificate ? json(r.certificate->d_bound) : json(nullptr)}};
    if (r.certificate) j["certificate"] = to_json(*r.certificate);
    return j;
}

inline SweepRecord sweep_record_from_json(const json& j)
{
    SweepRecord r;
    r.sweep = j.at("sweep").get<int>();
    r.objective = detail::number_or_nan(j.at("objective"));
    r.step_norm = detail::number_or_nan(j.at("step_norm"));
    r.h1_lhs = detail::number_or_nan(j.at("h1_lhs"));
    r.h1_rhs = detail::number_or_nan(j.at("h1_rhs"));
    if (j.contains("certificate")) r.certificate = certificate_from_json(j.at("certificate"));
    return r;
}

inline json to_json(const SolveResult& r)
{
    json trace = json::array();
    for (const auto& rec : r.trace.sweeps) trace.push_back(to_json(rec));
    return {{"schema", result_schema},
            {"version", schema_version},
            {"penalty", to_json(r.penalty)},
            {"options", to_json(r.options)},
            {"status", to_string(r.status)},
            {"sweeps", r.sweeps},
            {"objective", r.objective},
            {"stationarity_gap", r.stationarity_gap},
            {"iterate_norm_max", r.iterate_norm_max},
            {"theta", r.trace.theta},
            {"initial_objective", r.trace.initial_objective},
            {"x_hat", detail::vector_to_json(r.x_hat)},
            {"x_hat_normalized", detail::vector_to_json(r.x_hat_normalized)},
            {"trace", std::move(trace)}};
}

/// Inverse of to_json(SolveResult). Kept iterates are not serialized.
inline SolveResult result_from_json(const json& doc)
{
    detail::check_header(doc, result_schema);
    return detail::with_schema_errors([&] {
        SolveResult r;
        r.penalty = penalty_from_json(doc.at("penalty"));
        r.options = options_from_json(doc.at("options"));
        const auto status = doc.at("status").get<std::string>();
        if (status == "converged")
            r.status = SolveStatus::converged;
        else if (status == "max_sweeps")
            r.status = SolveStatus::max_sweeps;
        else
            fail(ErrorCode::schema, "unknown status " + status);
        r.sweeps = doc.at("sweeps").get<int>();
        r.objective = detail::number_or_nan(doc.at("objective"));
        r.stationarity_gap = detail::number_or_nan(doc.at("stationarity_gap"));
        r.iterate_norm_max = detail::number_or_nan(doc.at("iterate_norm_max"));
        r.trace.theta = doc.at("theta").get<double>();
        r.trace.initial_objective = detail::number_or_nan(doc.at("initial_objective"));
        r.x_hat = detail::vector_from_json(doc.at("x_hat"));
        r.x_hat_normalized = detail::vector_from_json(doc.at("x_hat_normalized"));
        const json& trace = doc.at("trace");
        if (!trace.is_array()) fail(ErrorCode::schema, "trace must be an array");
        for (const auto& rec : trace) r.trace.sweeps.push_back(sweep_record_from_json(rec));
        return r;
    });
}

inline json parse_json(std::string_view text, const std::string& source = "<json>")
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::schema, source + ": invalid JSON: " + e.what());
    }
}

/// Writes the result document; `extra` members (e.g. the resolved CLI
/// configuration) are merged in at top level.
inline void save_result(const SolveResult& result, const std::filesystem::path& path, const json& extra = json::object())
{
    json doc = to_json(result);
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    detail::write_file(path, doc.dump(2) + "\n");
}

inline SolveResult load_result(const std::filesystem::path& path)
{
    return result_from_json(parse_json(detail::read_file(path), path.string()));
}

inline SolveTrace load_trace(const std::filesystem::path& path)
{
    return load_result(path).trace;
}

inline json to_json(const SyntheticSpec& s)
{
    return {{"n", s.n},
            {"p", s.p},
            {"sparsity", s.sparsity},
            {"signal_low", s.signal_low},
            {"signal_high", s.signal_high},
            {"noise_sigma", s.noise_sigma},
            {"correlation", s.correlation},
            {"orthogonalize", s.orthogonalize},
            {"seed", s.seed}};
}

inline SyntheticSpec synthetic_spec_from_json(const json& j)
{
    return detail::with_schema_errors([&] {
        SyntheticSpec s;
        s.n = j.at("n").get<int>();
        s.p = j.at("p").get<int>();
        s.sparsity = j.at("sparsity").get<int>();
        s.signal_low = j.at("signal_low").get<double>();
        s.signal_high = j.at("signal_high").get<double>();
        s.noise_sigma = j.at("noise_sigma").get<double>();
        s.correlation = j.at("correlation").get<double>();
        s.orthogonalize = j.at("orthogonalize").get<bool>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.validate();
        return s;
    });
}

inline json instance_to_json(const SyntheticSpec& spec, const GeneratedProblem& gen)
{
    return {{"schema", instance_schema},
            {"version", schema_version},
            {"spec", to_json(spec)},
            {"x_true", detail::vector_to_json(gen.x_true)},
            {"column_scales", detail::vector_to_json(gen.problem.column_scales())}};
}

} // namespace cdcert
