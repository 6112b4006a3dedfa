#pragma once

#include <set>
#include <utility>
#include <vector>

#include "gocart/numerics.hpp"

namespace gocart {

/// Unordered vertex pair stored as (min, max).
using Edge = std::pair<int, int>;
using EdgeSet = std::set<Edge>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct GlassoConfig {
    int max_outer_iters = 500;
    double kkt_tol = 1e-4;
    double change_tol = 1e-10;   // per-sweep max change of the covariance iterate, relative
    double zero_threshold = 1e-8;
    int refit_max_iters = 2000;
    double refit_tol = 1e-5;
    NumericsConfig inner{};
};

/// A sparse precision matrix together with its inverse and graph.
struct PrecisionEstimate {
    Matrix omega;
    Matrix sigma;
    double lambda = 0.0;
    double log_det = 0.0;  // log|omega|
    EdgeSet edges;
};

struct RegPath {
    std::vector<double> lambdas;  // strictly decreasing
    std::vector<PrecisionEstimate> estimates;
};

EdgeSet edges_of(const Matrix& omega, double zero_threshold = 1e-8);

/// tr(S * omega) - log|omega|, the Gaussian negative log-likelihood up to constants.
double gaussian_loss(const Matrix& S, const Matrix& omega, double log_det_omega);
double gaussian_loss(const Matrix& S, const PrecisionEstimate& est);

/// tr(S omega) - log|omega| + lambda * sum_{j,k} |omega_jk|.
double glasso_objective(const Matrix& S, const Matrix& omega, double lambda);

/// max-norm of the violated part of S - Sigma + lambda * subgradient.
double stationarity_residual(const Matrix& S, const PrecisionEstimate& est);

/// Block coordinate descent over columns of the covariance iterate; each
/// column solves a lasso_cov subproblem. The diagonal of omega is penalized.
PrecisionEstimate glasso_solve(const Matrix& S, double lambda, const PrecisionEstimate* warm = nullptr,
                               const GlassoConfig& cfg = {});

/// max_{i != j} |S_ij|, floored at 1e-3.
double lambda_max(const Matrix& S);

/// Log-spaced path lambda_max(S) ... ratio * lambda_max(S), warm-started.
RegPath reg_path(const Matrix& S, int num_lambdas = 30, double ratio = 0.01, const GlassoConfig& cfg = {});

/// Unpenalized Gaussian MLE with omega_jk forced to zero off `edges`.
/// Throws Infeasible when the pattern admits no SPD solution for S.
PrecisionEstimate refit_pattern(const Matrix& S, const EdgeSet& edges, const GlassoConfig& cfg = {});

/// Picks the path entry (refit on train_S when `refit`) with the smallest
/// held-out loss tr(heldout_S * omega) - log|omega|. Ties go to the larger
/// lambda. Entries whose refit fails are skipped; if nothing is finite the
/// sparsest entry is returned.
PrecisionEstimate select_by_heldout(const RegPath& path, const Matrix& train_S, const Matrix& heldout_S,
                                    bool refit, const GlassoConfig& cfg = {});

}  // namespace gocart
