#pragma once

#include "gocart/dpt.hpp"
#include "gocart/glasso.hpp"

namespace gocart {

struct EdgeMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// precision = |est & truth| / |est|, recall = |est & truth| / |truth|, F1 the
/// harmonic mean. Empty denominators (and precision + recall == 0) give 0.
EdgeMetrics edge_metrics(const EdgeSet& est, const EdgeSet& truth);

/// True when every truth cell is a union of estimated cells (the estimate
/// may be finer).
bool partition_recovered(const Partition& truth, const Partition& est);

/// True when both partitions hold the same set of cells.
bool exact_recovery(const Partition& truth, const Partition& est);

}  // namespace gocart
