#pragma once

#include <cstddef>
#include <vector>

#include "gocart/risk.hpp"

namespace gocart {

/// Exhaustive search over every tree in T_N. Intended for validation at
/// tiny scale (d <= 3, K <= 2); leaf fits are cached per cell.
struct ExactConfig {
    LeafFitConfig leaf{};
    /// Candidate trees need min_leaf training (and, for the held-out
    /// criterion, held-out) rows in every leaf; the root is always a candidate.
    std::size_t min_leaf = 10;
    /// Per-leaf lambda grid for the penalized criterion.
    std::vector<double> penalized_lambdas{0.2, 0.1, 0.05};
    double tree_cap = 1e6;
};

struct ExactResult {
    FittedTree fitted;
    RiskReport report;
};

/// argmin_T  R_hat(T) + pen(T) on the training sample.
ExactResult fit_penalized(const Dataset& train, int K, double gamma, const ExactConfig& cfg = {});

/// argmin_T  held-out risk of the tree whose leaves are fitted on `train`.
ExactResult fit_heldout(const Dataset& train, const Dataset& heldout, int K, const ExactConfig& cfg = {});

}  // namespace gocart
