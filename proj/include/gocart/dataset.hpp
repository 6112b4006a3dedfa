#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gocart/numerics.hpp"

namespace gocart {

/// Paired observations: row i of `x` (covariates) goes with row i of `y`.
/// Covariates are stored row-major so a row can be viewed as a span.
struct Dataset {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x;
    Matrix y;

    std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t dim_x() const { return static_cast<std::size_t>(x.cols()); }
    std::size_t dim_y() const { return static_cast<std::size_t>(y.cols()); }
    bool empty() const { return size() == 0; }

    std::span<const double> covariates(std::size_t i) const {
        return {x.data() + i * dim_x(), dim_x()};
    }

    static Dataset with_shape(std::size_t n, std::size_t d, std::size_t p);
};

/// Sample mean and 1/n covariance of the rows of y selected by idx.
struct Moments {
    Vector mean;
    Matrix cov;
    std::size_t count = 0;
};
Moments sample_moments(const Matrix& y, std::span<const std::size_t> idx);

/// 1/n second moment of the selected rows about a given centre.
Matrix second_moment_about(const Matrix& y, std::span<const std::size_t> idx, const Vector& centre);

std::vector<std::size_t> all_indices(std::size_t n);

/// Header `x1..xd,y1..yp`, values printed with 17 significant digits.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path);

/// Affine per-axis map of covariates into [0,1]; values outside the fitted
/// range are clamped.
struct MinMaxScaler {
    std::vector<double> min;
    std::vector<double> max;

    static MinMaxScaler fit(const Dataset& data);
    std::vector<double> apply(std::span<const double> raw) const;
    std::vector<double> invert(std::span<const double> unit) const;
    void transform(Dataset& data) const;
};

/// Atomically replaces `path` (write to a sibling temp file, then rename).
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace gocart
