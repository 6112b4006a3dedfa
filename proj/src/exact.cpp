#include "gocart/exact.hpp"

#include <limits>
#include <map>
#include <optional>

#include "gocart/errors.hpp"

namespace gocart {

namespace {

struct CellEntry {
    bool eligible = false;
    double risk = 0.0;  // this cell's contribution to the criterion's risk term
    std::optional<LeafModel> model;
};

std::vector<std::size_t> rows_in(const Hyperrectangle& rect, const Dataset& data) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (rect.contains(data.covariates(i))) rows.push_back(i);
    return rows;
}

LeafModel fit_penalized_leaf(const Dataset& train, std::span<const std::size_t> rows, const ExactConfig& cfg) {
    const auto moments = sample_moments(train.y, rows);
    std::optional<PrecisionEstimate> best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (double lambda : cfg.penalized_lambdas) {
        auto est = glasso_solve(moments.cov, lambda, best ? &*best : nullptr, cfg.leaf.glasso);
        const double obj = gaussian_loss(moments.cov, est) + lambda * est.omega.cwiseAbs().sum();
        if (obj < best_obj) {
            best_obj = obj;
            best = std::move(est);
        }
    }
    if (!best) throw Error(ErrorKind::Usage, "fit_penalized: empty lambda grid");
    return {moments.mean, std::move(*best), rows.size()};
}

// Enumerates T_N, scoring each tree as sum(cell risk) + penalty(leaf count).
template <class CellScorer, class Penalty>
ExactResult search(std::size_t d, int K, const ExactConfig& cfg, CellScorer&& score_cell, Penalty&& penalty,
                   const char* method) {
    std::map<Hyperrectangle, CellEntry> cache;
    auto entry = [&](const Hyperrectangle& rect) -> const CellEntry& {
        auto it = cache.find(rect);
        if (it == cache.end()) it = cache.emplace(rect, score_cell(rect)).first;
        return it->second;
    };

    std::optional<DyadicTree> best_tree;
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t best_leaves = 0;
    std::size_t evaluated = 0;

    enumerate_trees(
        d, K,
        [&](const DyadicTree& tree) {
            ++evaluated;
            const auto leaves = tree.leaf_ids();
            double risk = 0.0;
            for (int id : leaves) {
                const auto& e = entry(tree.node(id).rect);
                if (!e.eligible && leaves.size() > 1) return;
                risk += e.risk;
            }
            const double obj = risk + penalty(leaves.size());
            if (obj < best_obj || (obj == best_obj && leaves.size() < best_leaves)) {
                best_obj = obj;
                best_leaves = leaves.size();
                best_tree = tree;
            }
        },
        cfg.tree_cap);

    if (!best_tree) throw Error(ErrorKind::EmptyDataset, "exact search found no admissible tree");
    std::vector<LeafModel> models;
    for (int id : best_tree->leaf_ids()) models.push_back(*entry(best_tree->node(id).rect).model);
    ExactResult result{FittedTree(std::move(*best_tree), std::move(models)), {}};
    result.report.method = method;
    result.report.leaf_count = best_leaves;
    result.report.penalty = penalty(best_leaves);
    result.report.objective = best_obj;
    result.report.trees_evaluated = evaluated;
    return result;
}

}  // namespace

ExactResult fit_penalized(const Dataset& train, int K, double gamma, const ExactConfig& cfg) {
    if (train.empty()) throw Error(ErrorKind::EmptyDataset, "fit_penalized: empty training data");
    const std::size_t n = train.size(), p = train.dim_y(), d = train.dim_x();
    auto score = [&](const Hyperrectangle& rect) {
        CellEntry e;
        const auto rows = rows_in(rect, train);
        e.eligible = rows.size() >= std::max<std::size_t>(cfg.min_leaf, 1);
        if (rows.empty()) return e;
        e.model = fit_penalized_leaf(train, rows, cfg);
        e.risk = cell_risk(*e.model, train, rows, n);
        return e;
    };
    auto penalty = [&](std::size_t m) { return pen(m, d, n, p, gamma); };
    auto result = search(d, K, cfg, score, penalty, "exact-penalized");
    result.report.empirical_risk = empirical_risk(result.fitted, train);
    result.report.heldout_risk = std::numeric_limits<double>::quiet_NaN();
    return result;
}

ExactResult fit_heldout(const Dataset& train, const Dataset& heldout, int K, const ExactConfig& cfg) {
    if (train.empty() || heldout.empty()) throw Error(ErrorKind::EmptyDataset, "fit_heldout: empty data");
    if (train.dim_x() != heldout.dim_x() || train.dim_y() != heldout.dim_y())
        throw Error(ErrorKind::DimensionMismatch, "fit_heldout: training and held-out shapes differ");
    const std::size_t d = train.dim_x(), n2 = heldout.size();
    const std::size_t min_leaf = std::max<std::size_t>(cfg.min_leaf, 1);
    auto score = [&](const Hyperrectangle& rect) {
        CellEntry e;
        CellSamples cell{rect, rows_in(rect, train), rows_in(rect, heldout)};
        e.eligible = cell.train.size() >= min_leaf && cell.heldout.size() >= min_leaf;
        if (cell.train.empty() || cell.heldout.empty()) return e;
        e.model = fit_leaf(train, heldout, cell, cfg.leaf);
        e.risk = cell_risk(*e.model, heldout, cell.heldout, n2);
        return e;
    };
    auto result = search(d, K, cfg, score, [](std::size_t) { return 0.0; }, "exact-heldout");
    result.report.empirical_risk = empirical_risk(result.fitted, train);
    result.report.heldout_risk = heldout_risk(result.fitted, heldout);
    return result;
}

}  // namespace gocart
