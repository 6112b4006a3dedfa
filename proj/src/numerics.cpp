#include "gocart/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "gocart/errors.hpp"

namespace gocart {

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = j + 1; i < m.rows(); ++i)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

CholeskyLogdet cholesky_logdet(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw Error(ErrorKind::NotPositiveDefinite, "matrix must be square and non-empty");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
    Matrix lower = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
        const double d = lower(i, i);
        if (!(d > 0.0) || !std::isfinite(d))
            throw Error(ErrorKind::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
        log_det += std::log(d);
    }
    return {SpdFactor(std::move(lower)), 2.0 * log_det};
}

double log_det_spd(const Matrix& m) { return cholesky_logdet(m).log_det; }

Matrix spd_inverse(const SpdFactor& f) {
    const auto n = f.order();
    const auto L = f.lower().triangularView<Eigen::Lower>();
    Matrix inv = Matrix::Identity(n, n);
    L.solveInPlace(inv);
    L.transpose().solveInPlace(inv);
    // Symmetrize away the rounding asymmetry of the two triangular solves.
    return 0.5 * (inv + inv.transpose());
}

namespace {

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

}  // namespace

double lasso_kkt_residual(const Matrix& V, const Vector& s, double lambda, const Vector& beta) {
    const Vector grad = V * beta - s;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double r = beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - lambda)
                                        : std::abs(grad(j) + lambda * (beta(j) > 0 ? 1.0 : -1.0));
        worst = std::max(worst, r);
    }
    return worst;
}

Vector lasso_cov(const Matrix& V, const Vector& s, double lambda, const NumericsConfig& cfg,
                 const Vector* warm) {
    const auto n = s.size();
    Vector beta = (warm != nullptr && warm->size() == n) ? *warm : Vector::Zero(n);
    if (n == 0) return beta;

    // grad = s - V beta, maintained incrementally.
    Vector grad = s - V * beta;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < cfg.lasso_max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double vjj = V(j, j);
            const double old = beta(j);
            const double z = grad(j) + vjj * old;
            const double updated = soft_threshold(z, lambda) / vjj;
            const double delta = updated - old;
            if (delta != 0.0) {
                beta(j) = updated;
                grad.noalias() -= delta * V.col(j);
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change <= cfg.lasso_change_tol * scale) break;
    }
    const double residual = lasso_kkt_residual(V, s, lambda, beta);
    if (!(residual <= cfg.lasso_kkt_tol))
        throw Error(ErrorKind::NoConvergence,
                    "lasso KKT residual " + std::to_string(residual) + " after coordinate descent");
    return beta;
}

Matrix sample_mvn(const Vector& mean, const SpdFactor& cov_factor, std::size_t count, Rng& rng) {
    const auto p = mean.size();
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(static_cast<Eigen::Index>(count), p);
    Vector z(p);
    const auto L = cov_factor.lower().triangularView<Eigen::Lower>();
    for (std::size_t i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z(j) = normal(rng);
        out.row(static_cast<Eigen::Index>(i)) = (mean + L * z).transpose();
    }
    return out;
}

}  // namespace gocart
