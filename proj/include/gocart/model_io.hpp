#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gocart/greedy.hpp"
#include "gocart/risk.hpp"
#include "gocart/simdata.hpp"

namespace gocart {

/// Everything the CLI persists for one fitted model.
///
/// Directory layout:
///   tree.json          {method, dims, K, p, rescale, root}
///                      node = {rect: {lower, upper}, leaf: true, model_ref}
///                           | {rect, split_dim, children: [left, right]}
///   leaves/leaf_J.json {leaf, mu, omega (dense rows), lambda, n_train, edges}
///   risk.csv           one RiskReport row
///   trace.csv          node,dim,gain,accepted (greedy only)
///   splits.csv         split,heldout_risk (greedy only; split 0 is the root fit)
struct ModelBundle {
    std::string method;
    FittedTree fitted;
    std::optional<MinMaxScaler> rescale;
    RiskReport report;
    std::vector<TraceRecord> trace;
    std::vector<double> risk_after_split;

    /// Maps raw covariates through the recorded rescaling, if any.
    std::vector<double> to_unit(std::span<const double> raw) const;
};

void save_model(const ModelBundle& model, const std::string& dir);
ModelBundle load_model(const std::string& dir);

/// Single-document JSON with leaf models inlined.
std::string model_to_json(const ModelBundle& model);
/// Graphviz DOT rendering of the tree.
std::string model_to_dot(const ModelBundle& model);

/// Layout file: {p, offdiag, regions: [{id, lower, upper, edges?}]}.
/// Regions without "edges" get a fresh random graph drawn from `rng`.
std::string layout_to_json(const RegionLayout& layout, double offdiag);
RegionLayout layout_from_json(const std::string& text, const GraphSpec& spec, Rng& rng);

/// Ground truth written by `generate`, read back by `eval`.
struct TruthFile {
    std::string kind;  // regions22 | chain | grid
    RegionLayout layout;                  // regions22
    std::vector<std::vector<double>> points;  // chain / grid: covariates per row
    std::vector<GraphTruth> graphs;           // chain / grid: truth per row
};

void save_truth(const TruthFile& truth, double offdiag, const std::string& dir);
TruthFile load_truth(const std::string& dir);

/// 17-significant-digit decimal text (reads back to the same double).
std::string format_double(double v);

}  // namespace gocart
