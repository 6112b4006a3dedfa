#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace gocart {

/// Axis-aligned box prod_l [lower_l, upper_l] inside [0,1]^d. Endpoints are
/// dyadic rationals, so midpoints and side lengths are exact in binary.
struct Hyperrectangle {
    std::vector<double> lower;
    std::vector<double> upper;

    static Hyperrectangle unit(std::size_t d);

    std::size_t dims() const { return lower.size(); }
    double volume() const;

    /// Half-open membership [a, b) per axis, closed at b == 1.
    bool contains(std::span<const double> x) const;
    /// True when `other` lies inside this box.
    bool encloses(const Hyperrectangle& other) const;

    friend bool operator==(const Hyperrectangle&, const Hyperrectangle&) = default;
    friend auto operator<=>(const Hyperrectangle&, const Hyperrectangle&) = default;
};

std::pair<Hyperrectangle, Hyperrectangle> split(const Hyperrectangle& rect, std::size_t k);

double side_length(const Hyperrectangle& rect, std::size_t k);

/// Number of dyadic halvings along k that produced this side (log2 of 1/length).
int split_depth(const Hyperrectangle& rect, std::size_t k);

struct Partition {
    std::vector<Hyperrectangle> cells;

    std::size_t size() const { return cells.size(); }
};

/// Cell index containing x; throws OutOfDomain outside [0,1]^d.
std::size_t locate(const Partition& partition, std::span<const double> x);

/// [[T]] = 3 m - 1 + (m - 1) log d / log 2.
double prefix_code_len(std::size_t leaf_count, std::size_t d);

/// Binary tree of dyadic splits. Node 0 is the root and covers [0,1]^d.
class DyadicTree {
public:
    struct Node {
        Hyperrectangle rect;
        int split_dim = -1;  // -1 for leaves
        int left = -1;
        int right = -1;
        int parent = -1;

        bool is_leaf() const { return split_dim < 0; }
    };

    DyadicTree() = default;
    DyadicTree(std::size_t d, int K);

    std::size_t dims() const { return dims_; }
    int max_depth() const { return max_depth_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t leaf_count() const;

    /// Splits leaf `id` along k; returns the ids of the new (left, right) children.
    std::pair<int, int> split_leaf(int id, std::size_t k);
    /// Undo the most recent split_leaf on `id` (children must be the last two nodes).
    void unsplit_last(int id);

    /// Leaves in depth-first, left-before-right order.
    std::vector<int> leaf_ids() const;
    Partition partition() const;

    /// Leaf node id containing x (descends using the half-open rule).
    int locate_leaf(std::span<const double> x) const;

    /// Checks the structural invariants; throws on violation.
    void validate() const;

private:
    std::size_t dims_ = 0;
    int max_depth_ = 0;
    std::vector<Node> nodes_;
};

/// |T_N| for N = 2^K via t(k) = 1 + sum_i [k_i > 0] t(k - e_i)^2. Returned as a
/// double so that huge classes overflow gracefully to large values.
double count_trees(std::size_t d, int K);

/// Calls `visit` once per tree in T_N (every tree whose leaves have side
/// length >= 2^-K). Throws TooLarge when count_trees exceeds `cap`.
void enumerate_trees(std::size_t d, int K, const std::function<void(const DyadicTree&)>& visit,
                     double cap = 1e6);

}  // namespace gocart
