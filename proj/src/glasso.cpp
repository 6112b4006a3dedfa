#include "gocart/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "gocart/errors.hpp"

namespace gocart {

namespace {

std::vector<int> all_but(int p, int j) {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(p > 0 ? p - 1 : 0));
    for (int i = 0; i < p; ++i)
        if (i != j) idx.push_back(i);
    return idx;
}

void check_square_symmetric(const Matrix& S, const char* who) {
    if (S.rows() != S.cols() || S.rows() == 0)
        throw Error(ErrorKind::DimensionMismatch, std::string(who) + ": S must be square and non-empty");
    if (!S.allFinite()) throw Error(ErrorKind::DimensionMismatch, std::string(who) + ": S has non-finite entries");
    const double tol = 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff());
    if (!is_symmetric(S, tol)) throw Error(ErrorKind::DimensionMismatch, std::string(who) + ": S is not symmetric");
}

// Fills sigma, log_det and edges from omega; omega must be SPD.
void finish_estimate(PrecisionEstimate& est, double zero_threshold) {
    auto chol = cholesky_logdet(est.omega);
    est.log_det = chol.log_det;
    est.sigma = spd_inverse(chol.factor);
    est.edges = edges_of(est.omega, zero_threshold);
}

}  // namespace

EdgeSet edges_of(const Matrix& omega, double zero_threshold) {
    EdgeSet edges;
    const auto p = static_cast<int>(omega.rows());
    for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k)
            if (std::abs(omega(j, k)) > zero_threshold) edges.emplace(j, k);
    return edges;
}

double gaussian_loss(const Matrix& S, const Matrix& omega, double log_det_omega) {
    return S.cwiseProduct(omega).sum() - log_det_omega;
}

double gaussian_loss(const Matrix& S, const PrecisionEstimate& est) {
    return gaussian_loss(S, est.omega, est.log_det);
}

double glasso_objective(const Matrix& S, const Matrix& omega, double lambda) {
    return gaussian_loss(S, omega, log_det_spd(omega)) + lambda * omega.cwiseAbs().sum();
}

double stationarity_residual(const Matrix& S, const PrecisionEstimate& est) {
    const auto p = S.rows();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = 0; k < p; ++k) {
            const double g = S(j, k) - est.sigma(j, k);
            const double w = est.omega(j, k);
            const double r = w == 0.0 ? std::max(0.0, std::abs(g) - est.lambda)
                                      : std::abs(g + est.lambda * (w > 0 ? 1.0 : -1.0));
            worst = std::max(worst, r);
        }
    }
    return worst;
}

double lambda_max(const Matrix& S) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < S.cols(); ++j)
        for (Eigen::Index i = 0; i < S.rows(); ++i)
            if (i != j) m = std::max(m, std::abs(S(i, j)));
    return std::max(m, 1e-3);
}

PrecisionEstimate glasso_solve(const Matrix& S, double lambda, const PrecisionEstimate* warm,
                               const GlassoConfig& cfg) {
    check_square_symmetric(S, "glasso_solve");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorKind::DimensionMismatch, "glasso_solve: lambda must be a finite non-negative value");
    for (Eigen::Index j = 0; j < S.rows(); ++j)
        if (S(j, j) < 0.0) throw Error(ErrorKind::DimensionMismatch, "glasso_solve: negative diagonal in S");

    const int p = static_cast<int>(S.rows());
    PrecisionEstimate est;
    est.lambda = lambda;

    if (lambda == 0.0) {
        // Unpenalized MLE; singular S surfaces as NotPositiveDefinite.
        auto chol = cholesky_logdet(S);
        est.omega = spd_inverse(chol.factor);
        finish_estimate(est, cfg.zero_threshold);
        return est;
    }

    Matrix W = S;
    W.diagonal().array() += lambda;
    Matrix B = Matrix::Zero(std::max(p - 1, 0), p);

    if (warm != nullptr && warm->omega.rows() == p) {
        Matrix Wwarm = warm->sigma;
        Wwarm.diagonal() = W.diagonal();
        Eigen::LLT<Matrix> llt(Wwarm);
        if (llt.info() == Eigen::Success) W = std::move(Wwarm);
        for (int j = 0; j < p; ++j) {
            const auto idx = all_but(p, j);
            B.col(j) = -warm->omega(idx, j) / warm->omega(j, j);
        }
    }

    std::vector<std::vector<int>> others(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) others[static_cast<std::size_t>(j)] = all_but(p, j);

    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    Matrix V(std::max(p - 1, 0), std::max(p - 1, 0));
    Vector s(std::max(p - 1, 0));

    for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            const auto& idx = others[static_cast<std::size_t>(j)];
            V = W(idx, idx);
            s = S(idx, j);
            Vector warm_beta = B.col(j);
            Vector beta = lasso_cov(V, s, lambda, cfg.inner, &warm_beta);
            B.col(j) = beta;
            Vector w12 = V * beta;
            for (int t = 0; t < p - 1; ++t) {
                const int i = idx[static_cast<std::size_t>(t)];
                max_change = std::max(max_change, std::abs(W(i, j) - w12(t)));
                W(i, j) = w12(t);
                W(j, i) = w12(t);
            }
        }

        if (max_change > cfg.change_tol * scale && iter + 1 < cfg.max_outer_iters) continue;

        Matrix omega = Matrix::Zero(p, p);
        for (int j = 0; j < p; ++j) {
            const auto& idx = others[static_cast<std::size_t>(j)];
            const Vector beta = B.col(j);
            const double denom = W(j, j) - (p > 1 ? W(idx, j).dot(beta) : 0.0);
            const double ojj = 1.0 / denom;
            omega(j, j) = ojj;
            for (int t = 0; t < p - 1; ++t) omega(idx[static_cast<std::size_t>(t)], j) = -beta(t) * ojj;
        }
        // Column-wise construction is symmetric only at the fixed point;
        // keep exact zeros where either side was thresholded to zero.
        for (int j = 0; j < p; ++j) {
            for (int k = j + 1; k < p; ++k) {
                const double a = omega(j, k), b = omega(k, j);
                const double v = (a == 0.0 || b == 0.0) ? 0.0 : 0.5 * (a + b);
                omega(j, k) = v;
                omega(k, j) = v;
            }
        }
        est.omega = std::move(omega);
        try {
            finish_estimate(est, cfg.zero_threshold);
        } catch (const Error&) {
            throw Error(ErrorKind::NoConvergence, "glasso_solve: iterate lost positive definiteness");
        }
        const double residual = stationarity_residual(S, est);
        if (residual <= cfg.kkt_tol) return est;
        if (iter + 1 >= cfg.max_outer_iters)
            throw Error(ErrorKind::NoConvergence,
                        "glasso_solve: stationarity residual " + std::to_string(residual) + " at lambda " +
                            std::to_string(lambda));
    }
    throw Error(ErrorKind::NoConvergence, "glasso_solve: outer iteration limit reached");
}

RegPath reg_path(const Matrix& S, int num_lambdas, double ratio, const GlassoConfig& cfg) {
    if (num_lambdas < 2) throw Error(ErrorKind::Usage, "reg_path: num_lambdas must be >= 2");
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::Usage, "reg_path: ratio must lie in (0, 1)");
    RegPath path;
    const double top = lambda_max(S);
    path.lambdas.reserve(static_cast<std::size_t>(num_lambdas));
    for (int i = 0; i < num_lambdas; ++i)
        path.lambdas.push_back(top * std::pow(ratio, static_cast<double>(i) / (num_lambdas - 1)));
    path.estimates.reserve(path.lambdas.size());
    for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
        const PrecisionEstimate* warm = i == 0 ? nullptr : &path.estimates.back();
        try {
            path.estimates.push_back(glasso_solve(S, path.lambdas[i], warm, cfg));
        } catch (const Error& e) {
            throw Error(e.kind(), std::string(e.what()) + " (path lambda " + std::to_string(path.lambdas[i]) + ")");
        }
    }
    return path;
}

PrecisionEstimate refit_pattern(const Matrix& S, const EdgeSet& edges, const GlassoConfig& cfg) {
    check_square_symmetric(S, "refit_pattern");
    const int p = static_cast<int>(S.rows());
    for (int j = 0; j < p; ++j)
        if (!(S(j, j) > 0.0)) throw Error(ErrorKind::Infeasible, "refit_pattern: non-positive variance");

    std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(p));
    for (const auto& [a, b] : edges) {
        if (a < 0 || b >= p || a == b) throw Error(ErrorKind::DimensionMismatch, "refit_pattern: edge out of range");
        nbrs[static_cast<std::size_t>(a)].push_back(b);
        nbrs[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& n : nbrs) std::sort(n.begin(), n.end());
    std::vector<std::vector<int>> others(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) others[static_cast<std::size_t>(j)] = all_but(p, j);

    // Covariance iterate; its diagonal and edge entries converge to S.
    Matrix W = S;
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    auto solve_column = [&](int j, Vector& beta) {
        const auto& nb = nbrs[static_cast<std::size_t>(j)];
        Eigen::LLT<Matrix> llt(W(nb, nb));
        if (llt.info() != Eigen::Success)
            throw Error(ErrorKind::Infeasible, "refit_pattern: singular neighbourhood system");
        beta = llt.solve(Vector(S(nb, j)));
    };

    Vector beta;
    for (int iter = 0; iter < cfg.refit_max_iters; ++iter) {
        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            const auto& nb = nbrs[static_cast<std::size_t>(j)];
            const auto& idx = others[static_cast<std::size_t>(j)];
            Vector w12 = Vector::Zero(p - 1);
            if (!nb.empty()) {
                solve_column(j, beta);
                w12 = W(idx, nb) * beta;
            }
            for (int t = 0; t < p - 1; ++t) {
                const int i = idx[static_cast<std::size_t>(t)];
                max_change = std::max(max_change, std::abs(W(i, j) - w12(t)));
                W(i, j) = w12(t);
                W(j, i) = w12(t);
            }
        }
        if (!W.allFinite()) throw Error(ErrorKind::Infeasible, "refit_pattern: iterate diverged");
        if (max_change <= 1e-13 * scale) break;
    }

    Matrix omega = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) {
        const auto& nb = nbrs[static_cast<std::size_t>(j)];
        double denom = W(j, j);
        if (!nb.empty()) {
            solve_column(j, beta);
            denom -= Vector(W(nb, j)).dot(beta);
        }
        if (!(denom > 0.0) || !std::isfinite(denom))
            throw Error(ErrorKind::Infeasible, "refit_pattern: no positive-definite completion");
        const double ojj = 1.0 / denom;
        omega(j, j) = ojj;
        for (std::size_t t = 0; t < nb.size(); ++t) omega(nb[t], j) = -beta(static_cast<Eigen::Index>(t)) * ojj;
    }
    omega = 0.5 * (omega + omega.transpose()).eval();

    PrecisionEstimate est;
    est.lambda = 0.0;
    est.omega = std::move(omega);
    try {
        finish_estimate(est, cfg.zero_threshold);
    } catch (const Error&) {
        throw Error(ErrorKind::Infeasible, "refit_pattern: refitted precision is not positive definite");
    }

    double residual = 0.0;
    for (int j = 0; j < p; ++j) residual = std::max(residual, std::abs(est.sigma(j, j) - S(j, j)));
    for (const auto& [a, b] : edges) residual = std::max(residual, std::abs(est.sigma(a, b) - S(a, b)));
    if (!(residual <= cfg.refit_tol * scale))
        throw Error(ErrorKind::NoConvergence, "refit_pattern: residual " + std::to_string(residual));
    return est;
}

PrecisionEstimate select_by_heldout(const RegPath& path, const Matrix& train_S, const Matrix& heldout_S,
                                    bool refit, const GlassoConfig& cfg) {
    if (path.estimates.empty()) throw Error(ErrorKind::EmptyDataset, "select_by_heldout: empty path");

    std::map<EdgeSet, std::optional<PrecisionEstimate>> refits;
    std::optional<PrecisionEstimate> best;
    double best_risk = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < path.estimates.size(); ++i) {
        const PrecisionEstimate* candidate = &path.estimates[i];
        std::optional<PrecisionEstimate> refitted;
        if (refit) {
            auto it = refits.find(candidate->edges);
            if (it == refits.end()) {
                std::optional<PrecisionEstimate> r;
                try {
                    r = refit_pattern(train_S, candidate->edges, cfg);
                } catch (const Error&) {
                    r.reset();
                }
                it = refits.emplace(candidate->edges, std::move(r)).first;
            }
            if (!it->second) continue;
            refitted = *it->second;
            refitted->lambda = candidate->lambda;
            candidate = &*refitted;
        }
        const double risk = gaussian_loss(heldout_S, *candidate);
        if (std::isfinite(risk) && risk < best_risk) {
            best_risk = risk;
            best = *candidate;
        }
    }
    if (!best) return path.estimates.front();
    return *best;
}

}  // namespace gocart
