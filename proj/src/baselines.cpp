#include "gocart/baselines.hpp"

#include <cmath>
#include <numbers>

#include "gocart/errors.hpp"

namespace gocart {

Matrix conditional_covariance(const Dataset& data, double lambda_x, const GlassoConfig& cfg) {
    if (data.size() < 2) throw Error(ErrorKind::EmptyDataset, "parametric_fit: needs at least two rows");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(data.dim_x());
    const auto p = static_cast<Eigen::Index>(data.dim_y());

    Matrix z(n, d + p);
    z.leftCols(d) = data.x;
    z.rightCols(p) = data.y;
    const Vector mean = z.colwise().mean().transpose();
    z.rowwise() -= mean.transpose();
    const Matrix joint = (z.transpose() * z) / static_cast<double>(n);

    const Matrix sigma_x = joint.topLeftCorner(d, d);
    const Matrix sigma_xy = joint.topRightCorner(d, p);
    const Matrix sigma_y = joint.bottomRightCorner(p, p);
    const Matrix omega_x = glasso_solve(sigma_x, lambda_x, nullptr, cfg).omega;
    Matrix cond = sigma_y - sigma_xy.transpose() * omega_x * sigma_xy;
    return 0.5 * (cond + cond.transpose());
}

PrecisionEstimate parametric_fit(const Dataset& data, double lambda_x, double lambda_y, const GlassoConfig& cfg) {
    return glasso_solve(conditional_covariance(data, lambda_x, cfg), lambda_y, nullptr, cfg);
}

KernelMoments weighted_moments(const Matrix& y, std::span<const double> weights) {
    const auto p = y.cols();
    KernelMoments km;
    km.mean = Vector::Zero(p);
    km.cov = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        km.weight_sum += weights[i];
        km.mean += weights[i] * y.row(static_cast<Eigen::Index>(i)).transpose();
    }
    if (!(km.weight_sum > 0.0) || !std::isfinite(km.weight_sum))
        throw Error(ErrorKind::DegenerateWeights, "kernel weights sum to zero");
    km.mean /= km.weight_sum;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Vector r = y.row(static_cast<Eigen::Index>(i)).transpose() - km.mean;
        km.cov.noalias() += weights[i] * r * r.transpose();
    }
    km.cov /= km.weight_sum;
    return km;
}

KernelMoments kernel_moments(const Dataset& data, std::span<const double> x0, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::Usage, "kernel bandwidth must be positive");
    if (x0.size() != data.dim_x()) throw Error(ErrorKind::DimensionMismatch, "x0 dimension does not match data");
    if (data.empty()) throw Error(ErrorKind::EmptyDataset, "kernel_fit: empty dataset");
    std::vector<double> w(data.size());
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto xi = data.covariates(i);
        double dist2 = 0.0;
        for (std::size_t k = 0; k < x0.size(); ++k) dist2 += (x0[k] - xi[k]) * (x0[k] - xi[k]);
        const double u = std::sqrt(dist2) / h;
        w[i] = norm * std::exp(-0.5 * u * u);
    }
    return weighted_moments(data.y, w);
}

PrecisionEstimate kernel_fit(const Dataset& data, std::span<const double> x0, double h, double lambda,
                             const GlassoConfig& cfg) {
    return glasso_solve(kernel_moments(data, x0, h).cov, lambda, nullptr, cfg);
}

}  // namespace gocart
