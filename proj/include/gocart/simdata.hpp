#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gocart/dataset.hpp"
#include "gocart/dpt.hpp"
#include "gocart/glasso.hpp"

namespace gocart {

struct GraphTruth {
    int p = 0;
    EdgeSet edges;

    int degree(int v) const;
    int max_degree() const;
};

/// Rejection sampler: uniform vertex pairs are drawn one at a time and kept
/// unless already present or exceeding max_deg. Restarts up to 100 times.
GraphTruth gen_er_graph(int p, int num_edges, int max_deg, Rng& rng);

/// Unit diagonal, `offdiag` on edges, zero elsewhere; certified SPD.
Matrix omega_from_graph(const GraphTruth& g, double offdiag = 0.245);

struct Region {
    int id = 0;
    Hyperrectangle rect;  // over the first two covariates
    GraphTruth graph;
    Matrix omega;
};

struct RegionLayout {
    std::vector<Region> regions;

    Partition partition() const;
    /// Index into regions of the cell containing (x1, x2).
    std::size_t region_of(std::span<const double> x) const;
};

/// The 22-cell dyadic layout of [0,1]^2 shipped by default:
///   ids 1-4   : area 1/64 (1/8 x 1/8)
///   ids 5-16  : area 1/32
///   ids 17-21 : area 1/16 (undivided 1/4 x 1/4 blocks)
///   id 22     : [1/2,1]^2
/// Exact corners are tabulated in simdata.cpp.
std::vector<Hyperrectangle> canonical_cells22();

struct GraphSpec {
    int p = 20;
    int num_edges = 10;
    int max_deg = 4;
    double offdiag = 0.245;
};

/// Draws one Erdos-Renyi graph per cell (in order) and builds its precision.
RegionLayout make_layout(const std::vector<Hyperrectangle>& cells, const GraphSpec& spec, Rng& rng);

struct RegionsData {
    Dataset train;
    Dataset heldout;
    RegionLayout truth;
};

/// Uniform covariates on [0,1]^d; the response of a row is N(0, Omega_t^-1)
/// for the region t holding (x1, x2). The held-out sample is drawn the same
/// way from the same truths. `layout` overrides the default geometry/graphs.
RegionsData gen_regions22(std::size_t n, std::size_t d, Rng& rng, const GraphSpec& spec = {},
                          std::optional<RegionLayout> layout = std::nullopt);

/// Per-step graph mutation used by the chain and grid generators.
struct EvolveSpec {
    GraphSpec graph{};
    int min_edges = 5;
    int max_edges = 15;
    double p_remove = 0.05;
    double p_add = 0.05;
};

/// With probability p_remove drop a uniform edge (skipped at min_edges); then
/// with probability p_add add a uniform non-edge whose endpoints stay within
/// the degree cap (skipped at max_edges). Both draws are always consumed.
GraphTruth mutate_graph(const GraphTruth& g, const EvolveSpec& spec, Rng& rng);

struct SequenceData {
    Dataset train;
    Dataset heldout;              // same covariates, fresh responses
    std::vector<GraphTruth> graphs;  // truth for row i of train/heldout
};

/// n equally spaced points on [0,1] with a slowly mutating graph along the chain.
SequenceData gen_chain(std::size_t n, Rng& rng, const EvolveSpec& spec = {});

/// side x side equally spaced points on [0,1]^2; row (i * side + j) holds
/// x = (i/(side-1), j/(side-1)). Graphs are built along anti-diagonals from a
/// randomly chosen predecessor (i-1, j) or (i, j-1).
SequenceData gen_grid(std::size_t side, Rng& rng, const EvolveSpec& spec = {});

}  // namespace gocart
