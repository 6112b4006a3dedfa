#include "gocart/simdata.hpp"

#include <algorithm>
#include <iterator>
#include <map>
#include <string>

#include "gocart/errors.hpp"

namespace gocart {

int GraphTruth::degree(int v) const {
    int deg = 0;
    for (const auto& [a, b] : edges) deg += (a == v) + (b == v);
    return deg;
}

int GraphTruth::max_degree() const {
    std::vector<int> deg(static_cast<std::size_t>(p), 0);
    for (const auto& [a, b] : edges) {
        ++deg[static_cast<std::size_t>(a)];
        ++deg[static_cast<std::size_t>(b)];
    }
    return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

GraphTruth gen_er_graph(int p, int num_edges, int max_deg, Rng& rng) {
    if (p < 1 || num_edges < 0 || max_deg < 0) throw Error(ErrorKind::Usage, "gen_er_graph: invalid arguments");
    const long long max_pairs = static_cast<long long>(p) * (p - 1) / 2;
    if (num_edges > max_pairs || 2LL * num_edges > static_cast<long long>(p) * max_deg)
        throw Error(ErrorKind::Infeasible, "gen_er_graph: edge count incompatible with the degree cap");

    std::uniform_int_distribution<int> vertex(0, p - 1);
    const long long attempt_cap = 100LL * p * p + 1000;
    for (int restart = 0; restart < 100; ++restart) {
        GraphTruth g{p, {}};
        std::vector<int> deg(static_cast<std::size_t>(p), 0);
        for (long long attempt = 0; attempt < attempt_cap && static_cast<int>(g.edges.size()) < num_edges; ++attempt) {
            const int a = vertex(rng), b = vertex(rng);
            if (a == b) continue;
            const Edge e = make_edge(a, b);
            if (g.edges.count(e) || deg[static_cast<std::size_t>(a)] >= max_deg || deg[static_cast<std::size_t>(b)] >= max_deg)
                continue;
            g.edges.insert(e);
            ++deg[static_cast<std::size_t>(a)];
            ++deg[static_cast<std::size_t>(b)];
        }
        if (static_cast<int>(g.edges.size()) == num_edges) return g;
    }
    throw Error(ErrorKind::Infeasible, "gen_er_graph: rejection sampling did not reach the edge count");
}

Matrix omega_from_graph(const GraphTruth& g, double offdiag) {
    Matrix omega = Matrix::Identity(g.p, g.p);
    for (const auto& [a, b] : g.edges) {
        omega(a, b) = offdiag;
        omega(b, a) = offdiag;
    }
    cholesky_logdet(omega);  // throws NotPositiveDefinite
    return omega;
}

Partition RegionLayout::partition() const {
    Partition part;
    for (const auto& r : regions) part.cells.push_back(r.rect);
    return part;
}

std::size_t RegionLayout::region_of(std::span<const double> x) const {
    if (x.size() < 2) throw Error(ErrorKind::DimensionMismatch, "region lookup needs two covariates");
    const auto xy = x.first(2);
    for (double v : xy)
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::OutOfDomain, "covariate outside [0, 1]");
    for (std::size_t i = 0; i < regions.size(); ++i)
        if (regions[i].rect.contains(xy)) return i;
    throw Error(ErrorKind::OutOfDomain, "point not covered by the region layout");
}

std::vector<Hyperrectangle> canonical_cells22() {
    // {x1_lo, x1_hi, x2_lo, x2_hi}. The two lower quadrants share one shape:
    // a "T" block (a 1/8 x 1/4 strip beside two 1/8 x 1/8 cells), a block
    // halved along x1, one halved along x2, and an undivided block. Every
    // internal split of the generating tree therefore separates two children
    // whose mixtures differ clearly.
    static constexpr double table[22][4] = {
        // 1/64
        {0.125, 0.25, 0.0, 0.125}, {0.125, 0.25, 0.125, 0.25},
        {0.625, 0.75, 0.0, 0.125}, {0.625, 0.75, 0.125, 0.25},
        // 1/32
        {0.0, 0.125, 0.0, 0.25}, {0.5, 0.625, 0.0, 0.25},
        {0.25, 0.375, 0.0, 0.25}, {0.375, 0.5, 0.0, 0.25},
        {0.0, 0.25, 0.25, 0.375}, {0.0, 0.25, 0.375, 0.5},
        {0.75, 0.875, 0.0, 0.25}, {0.875, 1.0, 0.0, 0.25},
        {0.5, 0.75, 0.25, 0.375}, {0.5, 0.75, 0.375, 0.5},
        {0.0, 0.125, 0.75, 1.0}, {0.125, 0.25, 0.75, 1.0},
        // 1/16
        {0.25, 0.5, 0.25, 0.5}, {0.75, 1.0, 0.25, 0.5},
        {0.0, 0.25, 0.5, 0.75}, {0.25, 0.5, 0.5, 0.75}, {0.25, 0.5, 0.75, 1.0},
        // 1/4
        {0.5, 1.0, 0.5, 1.0},
    };
    std::vector<Hyperrectangle> cells;
    for (const auto& c : table) cells.push_back(Hyperrectangle{{c[0], c[2]}, {c[1], c[3]}});
    return cells;
}

RegionLayout make_layout(const std::vector<Hyperrectangle>& cells, const GraphSpec& spec, Rng& rng) {
    RegionLayout layout;
    int id = 1;
    for (const auto& rect : cells) {
        Region r;
        r.id = id++;
        r.rect = rect;
        r.graph = gen_er_graph(spec.p, spec.num_edges, spec.max_deg, rng);
        r.omega = omega_from_graph(r.graph, spec.offdiag);
        layout.regions.push_back(std::move(r));
    }
    return layout;
}

namespace {

void fill_uniform_x(Dataset& data, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < data.x.rows(); ++i)
        for (Eigen::Index k = 0; k < data.x.cols(); ++k) data.x(i, k) = unif(rng);
}

SpdFactor covariance_factor(const Matrix& omega) {
    return cholesky_logdet(spd_inverse(cholesky_logdet(omega).factor)).factor;
}

// Fills data.y row by row from N(0, factor factor^T) of the row's group.
void fill_responses(Dataset& data, const std::vector<std::size_t>& group, const std::vector<SpdFactor>& factors,
                    Rng& rng) {
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(data.dim_y()));
    for (std::size_t i = 0; i < data.size(); ++i)
        data.y.row(static_cast<Eigen::Index>(i)) = sample_mvn(zero, factors[group[i]], 1, rng).row(0);
}

}  // namespace

RegionsData gen_regions22(std::size_t n, std::size_t d, Rng& rng, const GraphSpec& spec,
                          std::optional<RegionLayout> layout) {
    if (n < 1 || d < 2) throw Error(ErrorKind::Usage, "gen_regions22: need n >= 1 and d >= 2");
    RegionsData out;
    out.truth = layout ? std::move(*layout) : make_layout(canonical_cells22(), spec, rng);
    const auto p = static_cast<std::size_t>(out.truth.regions.front().omega.rows());

    std::vector<SpdFactor> factors;
    for (const auto& r : out.truth.regions) factors.push_back(covariance_factor(r.omega));

    for (Dataset* data : {&out.train, &out.heldout}) {
        *data = Dataset::with_shape(n, d, p);
        fill_uniform_x(*data, rng);
        std::vector<std::size_t> group(n);
        for (std::size_t i = 0; i < n; ++i) group[i] = out.truth.region_of(data->covariates(i));
        fill_responses(*data, group, factors, rng);
    }
    return out;
}

GraphTruth mutate_graph(const GraphTruth& g, const EvolveSpec& spec, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    GraphTruth out = g;
    const double u_remove = unif(rng);
    if (u_remove < spec.p_remove && static_cast<int>(out.edges.size()) > spec.min_edges && !out.edges.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, out.edges.size() - 1);
        out.edges.erase(std::next(out.edges.begin(), static_cast<std::ptrdiff_t>(pick(rng))));
    }
    const double u_add = unif(rng);
    if (u_add < spec.p_add && static_cast<int>(out.edges.size()) < spec.max_edges) {
        std::vector<int> deg(static_cast<std::size_t>(out.p), 0);
        for (const auto& [a, b] : out.edges) {
            ++deg[static_cast<std::size_t>(a)];
            ++deg[static_cast<std::size_t>(b)];
        }
        std::vector<Edge> candidates;
        for (int a = 0; a < out.p; ++a)
            for (int b = a + 1; b < out.p; ++b)
                if (!out.edges.count({a, b}) && deg[static_cast<std::size_t>(a)] < spec.graph.max_deg &&
                    deg[static_cast<std::size_t>(b)] < spec.graph.max_deg)
                    candidates.emplace_back(a, b);
        if (!candidates.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            out.edges.insert(candidates[pick(rng)]);
        }
    }
    return out;
}

namespace {

// Responses for a sequence of per-row graphs; factors are shared between
// consecutive identical graphs.
void fill_sequence_responses(SequenceData& out, double offdiag, Rng& rng) {
    std::vector<SpdFactor> factors;
    std::vector<std::size_t> group(out.graphs.size());
    const EdgeSet* last = nullptr;
    std::map<EdgeSet, std::size_t> seen;
    for (std::size_t i = 0; i < out.graphs.size(); ++i) {
        const auto& g = out.graphs[i];
        if (last == nullptr || *last != g.edges) {
            auto it = seen.find(g.edges);
            if (it == seen.end()) {
                it = seen.emplace(g.edges, factors.size()).first;
                factors.push_back(covariance_factor(omega_from_graph(g, offdiag)));
            }
            group[i] = it->second;
        } else {
            group[i] = group[i - 1];
        }
        last = &g.edges;
    }
    fill_responses(out.train, group, factors, rng);
    fill_responses(out.heldout, group, factors, rng);
}

}  // namespace

SequenceData gen_chain(std::size_t n, Rng& rng, const EvolveSpec& spec) {
    if (n < 2) throw Error(ErrorKind::Usage, "gen_chain: need n >= 2");
    SequenceData out;
    const auto p = static_cast<std::size_t>(spec.graph.p);
    out.train = Dataset::with_shape(n, 1, p);
    for (std::size_t t = 0; t < n; ++t) out.train.x(static_cast<Eigen::Index>(t), 0) = static_cast<double>(t) / static_cast<double>(n - 1);
    out.heldout = out.train;

    out.graphs.push_back(gen_er_graph(spec.graph.p, spec.graph.num_edges, spec.graph.max_deg, rng));
    for (std::size_t t = 1; t < n; ++t) out.graphs.push_back(mutate_graph(out.graphs.back(), spec, rng));
    fill_sequence_responses(out, spec.graph.offdiag, rng);
    return out;
}

SequenceData gen_grid(std::size_t side, Rng& rng, const EvolveSpec& spec) {
    if (side < 2) throw Error(ErrorKind::Usage, "gen_grid: need side >= 2");
    SequenceData out;
    const auto p = static_cast<std::size_t>(spec.graph.p);
    const std::size_t n = side * side;
    out.train = Dataset::with_shape(n, 2, p);
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) {
            const auto row = static_cast<Eigen::Index>(i * side + j);
            out.train.x(row, 0) = static_cast<double>(i) / static_cast<double>(side - 1);
            out.train.x(row, 1) = static_cast<double>(j) / static_cast<double>(side - 1);
        }
    out.heldout = out.train;

    out.graphs.assign(n, GraphTruth{});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t diag = 0; diag <= 2 * (side - 1); ++diag) {
        const std::size_t i_lo = diag >= side ? diag - (side - 1) : 0;
        const std::size_t i_hi = std::min(diag, side - 1);
        for (std::size_t i = i_lo; i <= i_hi; ++i) {
            const std::size_t j = diag - i;
            auto& g = out.graphs[i * side + j];
            if (i == 0 && j == 0) {
                g = gen_er_graph(spec.graph.p, spec.graph.num_edges, spec.graph.max_deg, rng);
                continue;
            }
            const GraphTruth* basis = nullptr;
            if (i > 0 && j > 0) {
                basis = unif(rng) < 0.5 ? &out.graphs[(i - 1) * side + j] : &out.graphs[i * side + j - 1];
            } else if (i > 0) {
                basis = &out.graphs[(i - 1) * side + j];
            } else {
                basis = &out.graphs[i * side + j - 1];
            }
            g = mutate_graph(*basis, spec, rng);
        }
    }
    fill_sequence_responses(out, spec.graph.offdiag, rng);
    return out;
}

}  // namespace gocart
