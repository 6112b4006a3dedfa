#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gocart/risk.hpp"

namespace gocart {

struct GreedyConfig {
    int K = 10;                 // leaf side lengths stay >= 2^-K
    std::size_t min_leaf = 10;  // per child, in both training and held-out rows
    LeafFitConfig leaf{};
};

/// One considered split: frontier node, dimension, gain (-inf when illegal).
struct TraceRecord {
    int node = 0;
    std::size_t dim = 0;
    double gain = 0.0;
    bool accepted = false;
};

struct GrowResult {
    FittedTree fitted;
    std::vector<TraceRecord> trace;
    /// Total held-out risk of the root fit followed by the value after each accepted split.
    std::vector<double> risk_after_split;
};

/// Greedy held-out-risk tree growth. Frontier cells are processed in
/// creation order; each is split along the dimension with the largest
/// positive gain (ties to the smaller index) or finalized.
GrowResult grow(const Dataset& train, const Dataset& heldout, const GreedyConfig& cfg);

struct Prediction {
    Vector mu;
    Matrix omega;
    EdgeSet edges;
};

Prediction predict(const FittedTree& ft, std::span<const double> x);

}  // namespace gocart
