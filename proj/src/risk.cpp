#include "gocart/risk.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gocart/errors.hpp"

namespace gocart {

std::vector<std::string> check_bounds(std::span<const LeafModel> models, const ParameterBounds& bounds) {
    std::vector<std::string> warnings;
    for (std::size_t j = 0; j < models.size(); ++j) {
        const auto& m = models[j];
        if (bounds.mean_sup && m.mu.size() > 0 && m.mu.cwiseAbs().maxCoeff() > *bounds.mean_sup) {
            std::ostringstream os;
            os << "leaf " << j << ": |mu|_inf = " << m.mu.cwiseAbs().maxCoeff() << " exceeds B = " << *bounds.mean_sup;
            warnings.push_back(os.str());
        }
        if (bounds.precision_l1 && m.prec.omega.cwiseAbs().sum() > *bounds.precision_l1) {
            std::ostringstream os;
            os << "leaf " << j << ": |Omega|_1 = " << m.prec.omega.cwiseAbs().sum() << " exceeds L = "
               << *bounds.precision_l1;
            warnings.push_back(os.str());
        }
    }
    return warnings;
}

FittedTree::FittedTree(DyadicTree tree, std::vector<LeafModel> models)
    : tree_(std::move(tree)), models_(std::move(models)), node_to_leaf_(tree_.nodes().size(), -1) {
    const auto leaves = tree_.leaf_ids();
    if (leaves.size() != models_.size())
        throw Error(ErrorKind::DimensionMismatch, "FittedTree: one model per leaf required");
    for (std::size_t j = 0; j < leaves.size(); ++j) node_to_leaf_[static_cast<std::size_t>(leaves[j])] = static_cast<int>(j);
}

std::size_t FittedTree::leaf_index(std::span<const double> x) const {
    return static_cast<std::size_t>(node_to_leaf_[static_cast<std::size_t>(tree_.locate_leaf(x))]);
}

double point_loss(const LeafModel& model, const Eigen::Ref<const Vector>& y) {
    const Vector r = y - model.mu;
    return r.dot(model.prec.omega * r) - model.prec.log_det;
}

double cell_risk(const LeafModel& model, const Dataset& data, std::span<const std::size_t> idx, std::size_t n_total) {
    if (n_total == 0) throw Error(ErrorKind::EmptyDataset, "cell_risk: empty sample");
    double total = 0.0;
    for (auto i : idx) total += point_loss(model, data.y.row(static_cast<Eigen::Index>(i)).transpose());
    return total / static_cast<double>(n_total);
}

double empirical_risk(const FittedTree& ft, const Dataset& data) {
    if (data.empty()) throw Error(ErrorKind::EmptyDataset, "empirical_risk: empty dataset");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        total += point_loss(ft.model_at(data.covariates(i)), data.y.row(static_cast<Eigen::Index>(i)).transpose());
    return total / static_cast<double>(data.size());
}

double heldout_risk(const FittedTree& ft, const Dataset& heldout) { return empirical_risk(ft, heldout); }

double pen(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, double gamma) {
    const double code = prefix_code_len(leaf_count, d);
    const double nn = static_cast<double>(n);
    return gamma * static_cast<double>(leaf_count) *
           std::sqrt((code * std::log(2.0) + 2.0 * std::log(nn * static_cast<double>(p))) / nn);
}

double TheoryConstants::c1() const { return 8.0 * std::sqrt(v2) + 8.0 * B * std::sqrt(v1) + B * B; }

double TheoryConstants::c2() const {
    return 8.0 * std::sqrt(2.0 * v2) + 8.0 * B * std::sqrt(2.0 * v1) + std::sqrt(2.0) * B * B;
}

namespace {

double complexity_root(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, double confidence_const,
                       double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Usage, "delta must lie in (0, 1)");
    const double code = prefix_code_len(leaf_count, d);
    return std::sqrt((code * std::log(2.0) + 2.0 * std::log(static_cast<double>(p)) +
                      std::log(confidence_const / delta)) /
                     static_cast<double>(n));
}

}  // namespace

double theorem1_pen(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, const TheoryConstants& tc) {
    return (tc.c1() + 1.0) * tc.L_n * static_cast<double>(leaf_count) *
           complexity_root(leaf_count, d, n, p, 48.0, tc.delta);
}

double phi_n(std::size_t leaf_count, std::size_t d, std::size_t n, std::size_t p, const TheoryConstants& tc) {
    return (tc.c2() + std::sqrt(2.0)) * tc.L_n * static_cast<double>(leaf_count) *
           complexity_root(leaf_count, d, n, p, 384.0, tc.delta);
}

CellSamples root_cell(const Dataset& train, const Dataset& heldout) {
    return {Hyperrectangle::unit(train.dim_x()), all_indices(train.size()), all_indices(heldout.size())};
}

std::pair<CellSamples, CellSamples> split_cell(const CellSamples& cell, std::size_t k, const Dataset& train,
                                               const Dataset& heldout) {
    auto [lrect, rrect] = split(cell.rect, k);
    const double mid = lrect.upper[k];
    CellSamples left{std::move(lrect), {}, {}}, right{std::move(rrect), {}, {}};
    const auto kk = static_cast<Eigen::Index>(k);
    for (auto i : cell.train) (train.x(static_cast<Eigen::Index>(i), kk) < mid ? left : right).train.push_back(i);
    for (auto i : cell.heldout)
        (heldout.x(static_cast<Eigen::Index>(i), kk) < mid ? left : right).heldout.push_back(i);
    return {std::move(left), std::move(right)};
}

LeafModel fit_leaf(const Dataset& train, const Dataset& heldout, const CellSamples& cell, const LeafFitConfig& cfg) {
    if (cell.train.empty()) throw Error(ErrorKind::EmptyDataset, "fit_leaf: no training rows in cell");
    if (cell.heldout.empty()) throw Error(ErrorKind::EmptyDataset, "fit_leaf: no held-out rows in cell");
    const auto moments = sample_moments(train.y, cell.train);
    const Matrix heldout_S = second_moment_about(heldout.y, cell.heldout, moments.mean);
    const auto path = reg_path(moments.cov, cfg.num_lambdas, cfg.lambda_ratio, cfg.glasso);
    LeafModel model;
    model.mu = moments.mean;
    model.prec = select_by_heldout(path, moments.cov, heldout_S, cfg.refit, cfg.glasso);
    model.n_train = cell.train.size();
    return model;
}

CellFitter make_leaf_fitter(LeafFitConfig cfg) {
    return [cfg](const Dataset& train, const Dataset& heldout, const CellSamples& cell) {
        return fit_leaf(train, heldout, cell, cfg);
    };
}

SplitEvaluation evaluate_split(const CellSamples& cell, const LeafModel& parent_model, std::size_t k, int K,
                               std::size_t min_leaf, const Dataset& train, const Dataset& heldout,
                               const CellFitter& fitter) {
    SplitEvaluation ev;
    ev.gain = -std::numeric_limits<double>::infinity();
    if (k >= cell.rect.dims() || split_depth(cell.rect, k) > K - 1) return ev;
    auto [left, right] = split_cell(cell, k, train, heldout);
    ev.left = std::move(left);
    ev.right = std::move(right);
    if (ev.left.train.size() < min_leaf || ev.right.train.size() < min_leaf || ev.left.heldout.size() < min_leaf ||
        ev.right.heldout.size() < min_leaf)
        return ev;
    ev.left_model = fitter(train, heldout, ev.left);
    ev.right_model = fitter(train, heldout, ev.right);
    const std::size_t n2 = heldout.size();
    ev.gain = cell_risk(parent_model, heldout, cell.heldout, n2) - cell_risk(*ev.left_model, heldout, ev.left.heldout, n2) -
              cell_risk(*ev.right_model, heldout, ev.right.heldout, n2);
    return ev;
}

double split_gain(const CellSamples& cell, const LeafModel& parent_model, std::size_t k, int K, std::size_t min_leaf,
                  const Dataset& train, const Dataset& heldout, const CellFitter& fitter) {
    return evaluate_split(cell, parent_model, k, K, min_leaf, train, heldout, fitter).gain;
}

}  // namespace gocart
