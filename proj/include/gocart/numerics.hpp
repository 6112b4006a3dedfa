#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace gocart {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Tolerances shared by the dense primitives. Tests may tighten them.
struct NumericsConfig {
    double reconstruction_tol = 1e-10;  // relative, scaled by order
    double inverse_tol = 1e-8;
    double lasso_kkt_tol = 1e-6;
    double lasso_change_tol = 1e-12;
    int lasso_max_sweeps = 10000;
};

/// Lower-triangular Cholesky factor L of an SPD matrix, L * L^T = source.
class SpdFactor {
public:
    SpdFactor() = default;
    explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}

    Eigen::Index order() const { return lower_.rows(); }
    const Matrix& lower() const { return lower_; }
    Matrix reconstruct() const { return lower_ * lower_.transpose(); }

private:
    Matrix lower_;
};

struct CholeskyLogdet {
    SpdFactor factor;
    double log_det = 0.0;
};

bool is_symmetric(const Matrix& m, double tol = 0.0);

/// Throws Error(NotPositiveDefinite) when a pivot is not strictly positive.
CholeskyLogdet cholesky_logdet(const Matrix& m);

/// log|m| for an SPD matrix; same failure mode as cholesky_logdet.
double log_det_spd(const Matrix& m);

Matrix spd_inverse(const SpdFactor& f);

/// Cyclic coordinate descent for  min 1/2 b'Vb - s'b + lambda*|b|_1.
/// `warm`, when non-null, seeds the iterate. Stops once a sweep moves no
/// coefficient by more than lasso_change_tol (scaled), then certifies the
/// KKT conditions; throws Error(NoConvergence) if they do not hold.
Vector lasso_cov(const Matrix& V, const Vector& s, double lambda,
                 const NumericsConfig& cfg = {}, const Vector* warm = nullptr);

/// Largest coordinate-wise KKT violation of a lasso_cov solution.
double lasso_kkt_residual(const Matrix& V, const Vector& s, double lambda, const Vector& beta);

/// count x p draws of mean + L z, z ~ N(0, I); rows are observations.
Matrix sample_mvn(const Vector& mean, const SpdFactor& cov_factor, std::size_t count, Rng& rng);

}  // namespace gocart
