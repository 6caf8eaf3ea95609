#pragma once

#include <cdcert/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace cdcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Least-squares data (A, b) with unit-norm columns.
///
/// column_scales holds the norms the raw columns had before normalization;
/// a coefficient on the unit scale maps back as x_raw[i] = x_unit[i] / scale[i].
class Problem {
public:
    const Matrix& a() const noexcept { return a_; }
    const Vector& b() const noexcept { return b_; }
    const Vector& column_scales() const noexcept { return scales_; }
    Eigen::Index rows() const noexcept { return a_.rows(); }
    Eigen::Index cols() const noexcept { return a_.cols(); }

    Vector to_original_scale(const Vector& x_unit) const { return x_unit.cwiseQuotient(scales_); }
    Vector to_unit_scale(const Vector& x_raw) const { return x_raw.cwiseProduct(scales_); }

    /// Same design and scales, new response.
    Problem with_response(Vector b) const
    {
        if (b.size() != a_.rows()) fail(ErrorCode::dimension_mismatch, "response length != rows");
        if (!b.allFinite()) fail(ErrorCode::non_finite, "non-finite entry in response");
        return Problem(a_, std::move(b), scales_);
    }

    friend Problem normalize_columns(Matrix raw_a, Vector raw_b);

private:
    Problem(Matrix a, Vector b, Vector scales) : a_(std::move(a)), b_(std::move(b)), scales_(std::move(scales)) {}

    Matrix a_;
    Vector b_;
    Vector scales_;
};

/// Builds a Problem by scaling every column of raw_a to unit Euclidean norm.
///
/// Rejects empty input, row-count mismatch, non-finite entries and all-zero
/// columns (the coordinate subproblem for such a column is ill-posed).
inline Problem normalize_columns(Matrix raw_a, Vector raw_b)
{
    if (raw_a.rows() < 1 || raw_a.cols() < 1) fail(ErrorCode::dimension_mismatch, "design matrix must be at least 1x1");
    if (raw_b.size() != raw_a.rows())
        fail(ErrorCode::dimension_mismatch, "response has " + std::to_string(raw_b.size()) + " entries, design has " +
                                                std::to_string(raw_a.rows()) + " rows");
    if (!raw_a.allFinite() || !raw_b.allFinite()) fail(ErrorCode::non_finite, "non-finite entry in problem data");

    Vector scales(raw_a.cols());
    for (Eigen::Index j = 0; j < raw_a.cols(); ++j) {
        const double norm = raw_a.col(j).norm();
        if (norm == 0.0) fail(ErrorCode::zero_column, "column " + std::to_string(j) + " is identically zero");
        if (!std::isfinite(norm)) fail(ErrorCode::non_finite, "column " + std::to_string(j) + " norm overflows");
        scales[j] = norm;
        raw_a.col(j) /= norm;
    }
    return Problem(std::move(raw_a), std::move(raw_b), std::move(scales));
}

} // namespace cdcert
