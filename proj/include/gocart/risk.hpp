#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gocart/dataset.hpp"
#include "gocart/dpt.hpp"
#include "gocart/glasso.hpp"

namespace gocart {

/// Mean and sparse precision attached to one partition cell.
struct LeafModel {
    Vector mu;
    PrecisionEstimate prec;
    std::size_t n_train = 0;
};

/// Optional declared bounds on the per-cell parameters; checked after
/// fitting, never enforced.
struct ParameterBounds {
    std::optional<double> mean_sup;      // ||mu||_inf <= B
    std::optional<double> precision_l1;  // ||Omega||_1 <= L
};

/// Human-readable warnings for every leaf that breaks a supplied bound.
std::vector<std::string> check_bounds(std::span<const LeafModel> models, const ParameterBounds& bounds);

/// A dyadic tree with one LeafModel per leaf, stored in the order of
/// tree.leaf_ids() (i.e. tree.partition().cells).
class FittedTree {
public:
    FittedTree() = default;
    FittedTree(DyadicTree tree, std::vector<LeafModel> models);

    const DyadicTree& tree() const { return tree_; }
    const std::vector<LeafModel>& models() const { return models_; }
    std::size_t leaf_count() const { return models_.size(); }

    /// Index into models() of the leaf containing x.
    std::size_t leaf_index(std::span<const double> x) const;
    const LeafModel& model_at(std::span<const double> x) const { return models_[leaf_index(x)]; }

private:
    DyadicTree tree_;
    std::vector<LeafModel> models_;
    std::vector<int> node_to_leaf_;
};

/// Per-observation loss tr(Omega (y - mu)(y - mu)^T) - log|Omega|.
double point_loss(const LeafModel& model, const Eigen::Ref<const Vector>& y);

/// (1/n_total) * sum over idx of point_loss; the restriction of the risk to one cell.
double cell_risk(const LeafModel& model, const Dataset& data, std::span<const std::size_t> idx, std::size_t n_total);

/// (1/n) sum_i point_loss(model of x_i's cell, y_i); summed in row order.
double empirical_risk(const FittedTree& ft, const Dataset& data);
/// Same functional evaluated on a validation sample.
double heldout_risk(const FittedTree& ft, const Dataset& heldout);

/// pen(T) = gamma * m * sqrt(([[T]] log 2 + 2 log(n p)) / n).
double pen(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, double gamma);

/// Constants of the oracle-inequality penalties; supplied by the user.
struct TheoryConstants {
    double B = 1.0;
    double v1 = 1.0;
    double v2 = 1.0;
    double L_n = 1.0;
    double delta = 0.05;

    double c1() const;
    double c2() const;
};

double theorem1_pen(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, const TheoryConstants& tc);
double phi_n(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, const TheoryConstants& tc);

/// Training and validation rows that fall in one cell.
struct CellSamples {
    Hyperrectangle rect;
    std::vector<std::size_t> train;
    std::vector<std::size_t> heldout;
};

CellSamples root_cell(const Dataset& train, const Dataset& heldout);
std::pair<CellSamples, CellSamples> split_cell(const CellSamples& cell, std::size_t k, const Dataset& train,
                                               const Dataset& heldout);

using CellFitter = std::function<LeafModel(const Dataset& train, const Dataset& heldout, const CellSamples& cell)>;

/// Settings of the per-leaf estimator.
struct LeafFitConfig {
    int num_lambdas = 30;
    double lambda_ratio = 0.01;
    bool refit = true;
    GlassoConfig glasso{};
};

/// Training mean, glasso path on the training covariance, lambda chosen by
/// held-out loss about the training mean, optionally refit on the pattern.
LeafModel fit_leaf(const Dataset& train, const Dataset& heldout, const CellSamples& cell, const LeafFitConfig& cfg);
CellFitter make_leaf_fitter(LeafFitConfig cfg);

struct SplitEvaluation {
    double gain = 0.0;  // -infinity when the split is not allowed
    CellSamples left;
    CellSamples right;
    std::optional<LeafModel> left_model;
    std::optional<LeafModel> right_model;
};

/// Decrease of held-out risk from splitting `cell` (fitted with
/// `parent_model`) along k. Returns -infinity when side_length(k) <
/// 2^(-K+1) or either child has fewer than min_leaf training or held-out rows.
SplitEvaluation evaluate_split(const CellSamples& cell, const LeafModel& parent_model, std::size_t k, int K,
                               std::size_t min_leaf, const Dataset& train, const Dataset& heldout,
                               const CellFitter& fitter);

double split_gain(const CellSamples& cell, const LeafModel& parent_model, std::size_t k, int K, std::size_t min_leaf,
                  const Dataset& train, const Dataset& heldout, const CellFitter& fitter);

/// Summary row exported by the CLI.
struct RiskReport {
    std::string method;
    std::size_t leaf_count = 0;
    double empirical_risk = 0.0;
    double heldout_risk = 0.0;
    double penalty = 0.0;
    double objective = 0.0;
    std::size_t trees_evaluated = 0;
};

}  // namespace gocart
