#include "gocart/dpt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "gocart/errors.hpp"

namespace gocart {

namespace {

void check_in_domain(std::span<const double> x) {
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorKind::OutOfDomain, "point coordinate " + std::to_string(v) + " outside [0, 1]");
}

}  // namespace

Hyperrectangle Hyperrectangle::unit(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

double Hyperrectangle::volume() const {
    double v = 1.0;
    for (std::size_t l = 0; l < dims(); ++l) v *= upper[l] - lower[l];
    return v;
}

bool Hyperrectangle::contains(std::span<const double> x) const {
    if (x.size() != dims()) return false;
    for (std::size_t l = 0; l < dims(); ++l) {
        if (x[l] < lower[l]) return false;
        if (upper[l] == 1.0 ? x[l] > 1.0 : x[l] >= upper[l]) return false;
    }
    return true;
}

bool Hyperrectangle::encloses(const Hyperrectangle& other) const {
    if (other.dims() != dims()) return false;
    for (std::size_t l = 0; l < dims(); ++l)
        if (other.lower[l] < lower[l] || other.upper[l] > upper[l]) return false;
    return true;
}

std::pair<Hyperrectangle, Hyperrectangle> split(const Hyperrectangle& rect, std::size_t k) {
    if (k >= rect.dims()) throw Error(ErrorKind::DimensionMismatch, "split dimension out of range");
    const double mid = 0.5 * (rect.lower[k] + rect.upper[k]);
    Hyperrectangle left = rect, right = rect;
    left.upper[k] = mid;
    right.lower[k] = mid;
    return {std::move(left), std::move(right)};
}

double side_length(const Hyperrectangle& rect, std::size_t k) { return rect.upper[k] - rect.lower[k]; }

int split_depth(const Hyperrectangle& rect, std::size_t k) { return -std::ilogb(side_length(rect, k)); }

std::size_t locate(const Partition& partition, std::span<const double> x) {
    check_in_domain(x);
    for (std::size_t i = 0; i < partition.cells.size(); ++i)
        if (partition.cells[i].contains(x)) return i;
    throw Error(ErrorKind::OutOfDomain, "point not covered by the partition");
}

double prefix_code_len(std::size_t leaf_count, std::size_t d) {
    const double m = static_cast<double>(leaf_count);
    const double bits_per_split = d <= 1 ? 0.0 : std::log(static_cast<double>(d)) / std::log(2.0);
    return 3.0 * m - 1.0 + (m - 1.0) * bits_per_split;
}

DyadicTree::DyadicTree(std::size_t d, int K) : dims_(d), max_depth_(K) {
    nodes_.push_back(Node{Hyperrectangle::unit(d), -1, -1, -1, -1});
}

std::size_t DyadicTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::pair<int, int> DyadicTree::split_leaf(int id, std::size_t k) {
    auto& n = nodes_.at(static_cast<std::size_t>(id));
    if (!n.is_leaf()) throw Error(ErrorKind::Usage, "split_leaf: node is not a leaf");
    auto [l, r] = split(n.rect, k);
    const int left_id = static_cast<int>(nodes_.size());
    n.split_dim = static_cast<int>(k);
    n.left = left_id;
    n.right = left_id + 1;
    nodes_.push_back(Node{std::move(l), -1, -1, -1, id});
    nodes_.push_back(Node{std::move(r), -1, -1, -1, id});
    return {left_id, left_id + 1};
}

void DyadicTree::unsplit_last(int id) {
    auto& n = nodes_.at(static_cast<std::size_t>(id));
    nodes_.pop_back();
    nodes_.pop_back();
    n.split_dim = -1;
    n.left = n.right = -1;
}

std::vector<int> DyadicTree::leaf_ids() const {
    std::vector<int> out;
    if (nodes_.empty()) return out;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const auto& n = node(id);
        if (n.is_leaf()) {
            out.push_back(id);
        } else {
            stack.push_back(n.right);
            stack.push_back(n.left);
        }
    }
    return out;
}

Partition DyadicTree::partition() const {
    Partition p;
    for (int id : leaf_ids()) p.cells.push_back(node(id).rect);
    return p;
}

int DyadicTree::locate_leaf(std::span<const double> x) const {
    check_in_domain(x);
    if (x.size() != dims_) throw Error(ErrorKind::DimensionMismatch, "point dimension does not match tree");
    int id = 0;
    while (!node(id).is_leaf()) {
        const auto& n = node(id);
        const auto k = static_cast<std::size_t>(n.split_dim);
        const double mid = 0.5 * (n.rect.lower[k] + n.rect.upper[k]);
        id = x[k] < mid ? n.left : n.right;
    }
    return id;
}

void DyadicTree::validate() const {
    if (nodes_.empty() || node(0).rect != Hyperrectangle::unit(dims_))
        throw Error(ErrorKind::Schema, "tree root must cover the unit cube");
    double volume = 0.0;
    for (const auto& n : nodes_) {
        if (n.is_leaf()) {
            for (std::size_t k = 0; k < dims_; ++k)
                if (split_depth(n.rect, k) > max_depth_)
                    throw Error(ErrorKind::Schema, "leaf side length below 2^-K");
            volume += n.rect.volume();
            continue;
        }
        auto [l, r] = split(n.rect, static_cast<std::size_t>(n.split_dim));
        if (node(n.left).rect != l || node(n.right).rect != r)
            throw Error(ErrorKind::Schema, "children do not match the dyadic split of their parent");
    }
    if (volume != 1.0) throw Error(ErrorKind::Schema, "leaves do not tile the unit cube");
}

double count_trees(std::size_t d, int K) {
    std::map<std::vector<int>, double> memo;
    std::function<double(std::vector<int>)> t = [&](std::vector<int> budget) -> double {
        std::sort(budget.begin(), budget.end());
        if (auto it = memo.find(budget); it != memo.end()) return it->second;
        double total = 1.0;
        for (std::size_t i = 0; i < budget.size(); ++i) {
            if (budget[i] == 0) continue;
            auto child = budget;
            --child[i];
            const double c = t(child);
            total += c * c;
        }
        memo.emplace(budget, total);
        return total;
    };
    return t(std::vector<int>(d, K));
}

namespace {

void enumerate_rec(DyadicTree& tree, std::vector<int>& open, const std::function<void(const DyadicTree&)>& visit) {
    if (open.empty()) {
        visit(tree);
        return;
    }
    const int id = open.back();
    open.pop_back();
    enumerate_rec(tree, open, visit);  // id stays a leaf
    for (std::size_t k = 0; k < tree.dims(); ++k) {
        if (split_depth(tree.node(id).rect, k) >= tree.max_depth()) continue;
        auto [l, r] = tree.split_leaf(id, k);
        open.push_back(r);
        open.push_back(l);
        enumerate_rec(tree, open, visit);
        open.pop_back();
        open.pop_back();
        tree.unsplit_last(id);
    }
    open.push_back(id);
}

}  // namespace

void enumerate_trees(std::size_t d, int K, const std::function<void(const DyadicTree&)>& visit, double cap) {
    const double count = count_trees(d, K);
    if (count > cap)
        throw Error(ErrorKind::TooLarge, "T_N holds " + std::to_string(count) + " trees, above the cap of " +
                                             std::to_string(cap));
    DyadicTree tree(d, K);
    std::vector<int> open{0};
    enumerate_rec(tree, open, visit);
}

}  // namespace gocart
