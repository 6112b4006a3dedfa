#pragma once

#include <span>

#include "gocart/dataset.hpp"
#include "gocart/glasso.hpp"

namespace gocart {

/// Joint-Gaussian estimator: the conditional covariance of Y given X from
/// the blocks of the joint sample covariance, with Omega_X estimated by the
/// glasso at lambda_x (lambda_x = 0 gives the plain inverse).
Matrix conditional_covariance(const Dataset& data, double lambda_x, const GlassoConfig& cfg = {});

/// glasso(conditional_covariance(data, lambda_x), lambda_y). The resulting
/// graph does not depend on x.
PrecisionEstimate parametric_fit(const Dataset& data, double lambda_x, double lambda_y, const GlassoConfig& cfg = {});

struct KernelMoments {
    Vector mean;
    Matrix cov;
    double weight_sum = 0.0;
};

/// Gaussian-kernel weighted mean and covariance at x0 with bandwidth h.
KernelMoments kernel_moments(const Dataset& data, std::span<const double> x0, double h);

/// Same as kernel_moments but with caller-supplied weights (scale-free).
KernelMoments weighted_moments(const Matrix& y, std::span<const double> weights);

PrecisionEstimate kernel_fit(const Dataset& data, std::span<const double> x0, double h, double lambda,
                             const GlassoConfig& cfg = {});

}  // namespace gocart
