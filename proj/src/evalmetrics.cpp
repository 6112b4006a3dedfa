#include "gocart/evalmetrics.hpp"

#include <algorithm>

namespace gocart {

EdgeMetrics edge_metrics(const EdgeSet& est, const EdgeSet& truth) {
    std::size_t hits = 0;
    for (const auto& e : est) hits += truth.count(e);
    EdgeMetrics m;
    if (!est.empty()) m.precision = static_cast<double>(hits) / static_cast<double>(est.size());
    if (!truth.empty()) m.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
    if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

bool partition_recovered(const Partition& truth, const Partition& est) {
    for (const auto& cell : truth.cells) {
        // Estimated cells are dyadic, so each either lies inside `cell` or
        // overlaps it only partially; the inside volumes must fill it.
        double covered = 0.0;
        for (const auto& e : est.cells)
            if (cell.encloses(e)) covered += e.volume();
        if (covered != cell.volume()) return false;
    }
    return true;
}

bool exact_recovery(const Partition& truth, const Partition& est) {
    if (truth.size() != est.size()) return false;
    auto a = truth.cells, b = est.cells;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

}  // namespace gocart
