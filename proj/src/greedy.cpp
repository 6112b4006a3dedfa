#include "gocart/greedy.hpp"

#include <deque>
#include <limits>
#include <map>

#include "gocart/errors.hpp"

namespace gocart {

namespace {

struct FrontierCell {
    int node;
    CellSamples samples;
    LeafModel model;
};

}  // namespace

GrowResult grow(const Dataset& train, const Dataset& heldout, const GreedyConfig& cfg) {
    if (train.empty() || heldout.empty()) throw Error(ErrorKind::EmptyDataset, "grow: training and held-out data required");
    if (train.dim_x() != heldout.dim_x() || train.dim_y() != heldout.dim_y())
        throw Error(ErrorKind::DimensionMismatch, "grow: training and held-out shapes differ");
    if (cfg.K < 1 || cfg.min_leaf < 1) throw Error(ErrorKind::Usage, "grow: K and min_leaf must be >= 1");
    for (const Dataset* data : {&train, &heldout})
        for (std::size_t i = 0; i < data->size(); ++i)
            for (double v : data->covariates(i))
                if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::OutOfDomain, "grow: covariates must lie in [0, 1]");

    const std::size_t d = train.dim_x();
    const std::size_t n2 = heldout.size();
    const CellFitter fitter = make_leaf_fitter(cfg.leaf);

    GrowResult result;
    DyadicTree tree(d, cfg.K);
    std::map<int, LeafModel> final_models;

    std::deque<FrontierCell> frontier;
    {
        auto root = root_cell(train, heldout);
        auto model = fitter(train, heldout, root);
        result.risk_after_split.push_back(cell_risk(model, heldout, root.heldout, n2));
        frontier.push_back({0, std::move(root), std::move(model)});
    }

    while (!frontier.empty()) {
        FrontierCell cell = std::move(frontier.front());
        frontier.pop_front();

        std::optional<SplitEvaluation> best;
        std::size_t best_dim = 0;
        for (std::size_t k = 0; k < d; ++k) {
            auto ev = evaluate_split(cell.samples, cell.model, k, cfg.K, cfg.min_leaf, train, heldout, fitter);
            result.trace.push_back({cell.node, k, ev.gain, false});
            if (!best || ev.gain > best->gain) {
                best = std::move(ev);
                best_dim = k;
            }
        }

        if (best && best->gain > 0.0) {
            result.trace[result.trace.size() - d + best_dim].accepted = true;
            auto [l, r] = tree.split_leaf(cell.node, best_dim);
            result.risk_after_split.push_back(result.risk_after_split.back() - best->gain);
            frontier.push_back({l, std::move(best->left), std::move(*best->left_model)});
            frontier.push_back({r, std::move(best->right), std::move(*best->right_model)});
        } else {
            final_models.emplace(cell.node, std::move(cell.model));
        }
    }

    std::vector<LeafModel> models;
    for (int id : tree.leaf_ids()) models.push_back(std::move(final_models.at(id)));
    result.fitted = FittedTree(std::move(tree), std::move(models));
    return result;
}

Prediction predict(const FittedTree& ft, std::span<const double> x) {
    const auto& m = ft.model_at(x);
    return {m.mu, m.prec.omega, m.prec.edges};
}

}  // namespace gocart
