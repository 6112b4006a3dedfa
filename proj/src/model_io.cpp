#include "gocart/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gocart/errors.hpp"

namespace gocart {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[40];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return {buf, static_cast<std::size_t>(len)};
}

std::vector<double> ModelBundle::to_unit(std::span<const double> raw) const {
    if (rescale) return rescale->apply(raw);
    return {raw.begin(), raw.end()};
}

namespace {

json rect_json(const Hyperrectangle& r) { return {{"lower", r.lower}, {"upper", r.upper}}; }

Hyperrectangle rect_from(const json& j) {
    return {j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>()};
}

json edges_json(const EdgeSet& edges) {
    json arr = json::array();
    for (const auto& [a, b] : edges) arr.push_back({a, b});
    return arr;
}

EdgeSet edges_from(const json& j) {
    EdgeSet edges;
    for (const auto& e : j) edges.insert(make_edge(e.at(0).get<int>(), e.at(1).get<int>()));
    return edges;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    Matrix m(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != rows) throw Error(ErrorKind::Schema, "omega must be square");
        for (Eigen::Index k = 0; k < rows; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

json leaf_json(const LeafModel& m, std::size_t j) {
    return {{"leaf", j},
            {"mu", std::vector<double>(m.mu.data(), m.mu.data() + m.mu.size())},
            {"omega", matrix_json(m.prec.omega)},
            {"lambda", m.prec.lambda},
            {"n_train", m.n_train},
            {"edges", edges_json(m.prec.edges)}};
}

LeafModel leaf_from(const json& j) {
    LeafModel m;
    const auto mu = j.at("mu").get<std::vector<double>>();
    m.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    m.prec.omega = matrix_from(j.at("omega"));
    m.prec.lambda = j.at("lambda").get<double>();
    auto chol = cholesky_logdet(m.prec.omega);
    m.prec.log_det = chol.log_det;
    m.prec.sigma = spd_inverse(chol.factor);
    m.prec.edges = edges_from(j.at("edges"));
    m.n_train = j.at("n_train").get<std::size_t>();
    return m;
}

std::string leaf_ref(std::size_t j) { return "leaves/leaf_" + std::to_string(j) + ".json"; }

json node_json(const DyadicTree& tree, int id, const std::map<int, std::size_t>& leaf_of, bool inline_models,
               const std::vector<LeafModel>& models) {
    const auto& n = tree.node(id);
    json j = {{"rect", rect_json(n.rect)}};
    if (n.is_leaf()) {
        const auto leaf = leaf_of.at(id);
        j["leaf"] = true;
        if (inline_models)
            j["model"] = leaf_json(models[leaf], leaf);
        else
            j["model_ref"] = leaf_ref(leaf);
    } else {
        j["split_dim"] = n.split_dim;
        j["children"] = {node_json(tree, n.left, leaf_of, inline_models, models),
                         node_json(tree, n.right, leaf_of, inline_models, models)};
    }
    return j;
}

json tree_document(const ModelBundle& model, bool inline_models) {
    const auto& tree = model.fitted.tree();
    std::map<int, std::size_t> leaf_of;
    const auto leaves = tree.leaf_ids();
    for (std::size_t j = 0; j < leaves.size(); ++j) leaf_of[leaves[j]] = j;
    json doc = {{"method", model.method},
                {"dims", tree.dims()},
                {"K", tree.max_depth()},
                {"p", model.fitted.models().empty() ? 0 : model.fitted.models().front().mu.size()}};
    doc["rescale"] = model.rescale ? json{{"min", model.rescale->min}, {"max", model.rescale->max}} : json(nullptr);
    doc["root"] = node_json(tree, 0, leaf_of, inline_models, model.fitted.models());
    return doc;
}

void build_node(const json& j, DyadicTree& tree, int id, std::map<int, LeafModel>& models, const fs::path& dir) {
    if (rect_from(j.at("rect")) != tree.node(id).rect)
        throw Error(ErrorKind::Schema, "tree.json: node rectangle disagrees with its dyadic position");
    if (j.value("leaf", false)) {
        if (j.contains("model"))
            models[id] = leaf_from(j.at("model"));
        else
            models[id] = leaf_from(json::parse(read_file((dir / j.at("model_ref").get<std::string>()).string())));
        return;
    }
    const auto k = j.at("split_dim").get<std::size_t>();
    const auto& children = j.at("children");
    if (children.size() != 2) throw Error(ErrorKind::Schema, "tree.json: internal node needs two children");
    auto [l, r] = tree.split_leaf(id, k);
    build_node(children.at(0), tree, l, models, dir);
    build_node(children.at(1), tree, r, models, dir);
}

std::string report_csv(const RiskReport& r) {
    std::string out = "method,leaf_count,empirical_risk,heldout_risk,penalty,objective,trees_evaluated\n";
    out += r.method + "," + std::to_string(r.leaf_count) + "," + format_double(r.empirical_risk) + "," +
           format_double(r.heldout_risk) + "," + format_double(r.penalty) + "," + format_double(r.objective) + "," +
           std::to_string(r.trees_evaluated) + "\n";
    return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    if (!fs::exists(path)) return rows;
    std::stringstream ss(read_file(path.string()));
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line))
        if (!line.empty()) rows.push_back(csv_fields(line));
    return rows;
}

}  // namespace

std::string model_to_json(const ModelBundle& model) { return tree_document(model, true).dump(2) + "\n"; }

void save_model(const ModelBundle& model, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root / "leaves");
    write_file_atomic((root / "tree.json").string(), tree_document(model, false).dump(2) + "\n");
    const auto& models = model.fitted.models();
    for (std::size_t j = 0; j < models.size(); ++j)
        write_file_atomic((root / leaf_ref(j)).string(), leaf_json(models[j], j).dump(2) + "\n");
    write_file_atomic((root / "risk.csv").string(), report_csv(model.report));

    std::string trace = "node,dim,gain,accepted\n";
    for (const auto& t : model.trace)
        trace += std::to_string(t.node) + "," + std::to_string(t.dim + 1) + "," + format_double(t.gain) + "," +
                 (t.accepted ? "1" : "0") + "\n";
    write_file_atomic((root / "trace.csv").string(), trace);

    std::string splits = "split,heldout_risk\n";
    for (std::size_t s = 0; s < model.risk_after_split.size(); ++s)
        splits += std::to_string(s) + "," + format_double(model.risk_after_split[s]) + "\n";
    write_file_atomic((root / "splits.csv").string(), splits);
}

ModelBundle load_model(const std::string& dir) {
    const fs::path root(dir);
    const auto tree_path = root / "tree.json";
    if (!fs::exists(tree_path)) throw Error(ErrorKind::Io, "missing model file " + tree_path.string());
    try {
        const json doc = json::parse(read_file(tree_path.string()));
        ModelBundle model;
        model.method = doc.at("method").get<std::string>();
        DyadicTree tree(doc.at("dims").get<std::size_t>(), doc.at("K").get<int>());
        std::map<int, LeafModel> by_node;
        build_node(doc.at("root"), tree, 0, by_node, root);
        std::vector<LeafModel> models;
        for (int id : tree.leaf_ids()) models.push_back(std::move(by_node.at(id)));
        model.fitted = FittedTree(std::move(tree), std::move(models));
        if (!doc.at("rescale").is_null())
            model.rescale = MinMaxScaler{doc["rescale"].at("min").get<std::vector<double>>(),
                                         doc["rescale"].at("max").get<std::vector<double>>()};

        const auto report = read_csv_rows(root / "risk.csv");
        if (!report.empty() && report.front().size() == 7) {
            const auto& r = report.front();
            model.report = {r[0], std::stoul(r[1]), std::stod(r[2]), std::stod(r[3]), std::stod(r[4]), std::stod(r[5]),
                            std::stoul(r[6])};
        }
        for (const auto& r : read_csv_rows(root / "trace.csv"))
            model.trace.push_back({std::stoi(r.at(0)), std::stoul(r.at(1)) - 1, std::stod(r.at(2)), r.at(3) == "1"});
        for (const auto& r : read_csv_rows(root / "splits.csv")) model.risk_after_split.push_back(std::stod(r.at(1)));
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, tree_path.string() + ": " + e.what());
    }
}

std::string model_to_dot(const ModelBundle& model) {
    const auto& tree = model.fitted.tree();
    std::map<int, std::size_t> leaf_of;
    const auto leaves = tree.leaf_ids();
    for (std::size_t j = 0; j < leaves.size(); ++j) leaf_of[leaves[j]] = j;

    std::ostringstream os;
    os << "digraph gocart {\n  node [shape=box];\n";
    for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
        const auto& n = tree.nodes()[id];
        os << "  n" << id << " [label=\"";
        if (n.is_leaf()) {
            const auto j = leaf_of.at(static_cast<int>(id));
            os << "leaf " << j << "\\nedges " << model.fitted.models()[j].prec.edges.size();
        } else {
            const auto k = static_cast<std::size_t>(n.split_dim);
            os << "x" << k + 1 << " < " << format_double(0.5 * (n.rect.lower[k] + n.rect.upper[k]));
        }
        os << "\"];\n";
    }
    for (std::size_t id = 0; id < tree.nodes().size(); ++id) {
        const auto& n = tree.nodes()[id];
        if (n.is_leaf()) continue;
        os << "  n" << id << " -> n" << n.left << ";\n";
        os << "  n" << id << " -> n" << n.right << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::string layout_to_json(const RegionLayout& layout, double offdiag) {
    json regions = json::array();
    for (const auto& r : layout.regions)
        regions.push_back({{"id", r.id}, {"lower", r.rect.lower}, {"upper", r.rect.upper}, {"edges", edges_json(r.graph.edges)}});
    const int p = layout.regions.empty() ? 0 : layout.regions.front().graph.p;
    return json{{"p", p}, {"offdiag", offdiag}, {"regions", regions}}.dump(2) + "\n";
}

RegionLayout layout_from_json(const std::string& text, const GraphSpec& spec, Rng& rng) {
    try {
        const json doc = json::parse(text);
        const int p = doc.value("p", spec.p);
        const double offdiag = doc.value("offdiag", spec.offdiag);
        RegionLayout layout;
        int next_id = 1;
        for (const auto& r : doc.at("regions")) {
            Region region;
            region.id = r.value("id", next_id);
            next_id = region.id + 1;
            region.rect = {r.at("lower").get<std::vector<double>>(), r.at("upper").get<std::vector<double>>()};
            if (region.rect.dims() != 2) throw Error(ErrorKind::Schema, "layout regions must be two-dimensional");
            if (r.contains("edges")) {
                region.graph = {p, edges_from(r.at("edges"))};
                for (const auto& [a, b] : region.graph.edges)
                    if (a < 0 || b >= p || a == b)
                        throw Error(ErrorKind::Schema, "layout region " + std::to_string(region.id) + ": edge (" +
                                                           std::to_string(a) + ", " + std::to_string(b) +
                                                           ") is not a pair of distinct 0-based vertices below p = " +
                                                           std::to_string(p));
            } else {
                region.graph = gen_er_graph(p, spec.num_edges, spec.max_deg, rng);
            }
            region.omega = omega_from_graph(region.graph, offdiag);
            layout.regions.push_back(std::move(region));
        }
        if (layout.regions.empty()) throw Error(ErrorKind::Schema, "layout has no regions");
        double area = 0.0;
        for (const auto& r : layout.regions) area += r.rect.volume();
        if (area != 1.0) throw Error(ErrorKind::Schema, "layout regions do not tile [0,1]^2");
        return layout;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("layout: ") + e.what());
    }
}

void save_truth(const TruthFile& truth, double offdiag, const std::string& dir) {
    const fs::path root(dir);
    json doc;
    if (truth.kind == "regions22") {
        doc = json::parse(layout_to_json(truth.layout, offdiag));
        doc["kind"] = truth.kind;
    } else {
        // Graphs are stored once per distinct consecutive run and referenced by index.
        json graphs = json::array(), points = json::array();
        std::map<EdgeSet, std::size_t> index;
        for (std::size_t i = 0; i < truth.graphs.size(); ++i) {
            auto it = index.find(truth.graphs[i].edges);
            if (it == index.end()) {
                it = index.emplace(truth.graphs[i].edges, graphs.size()).first;
                graphs.push_back(edges_json(truth.graphs[i].edges));
            }
            points.push_back({{"x", truth.points[i]}, {"graph", it->second}});
        }
        const int p = truth.graphs.empty() ? 0 : truth.graphs.front().p;
        doc = {{"kind", truth.kind}, {"p", p}, {"offdiag", offdiag}, {"graphs", graphs}, {"points", points}};
    }
    write_file_atomic((root / "truth.json").string(), doc.dump(1) + "\n");
}

TruthFile load_truth(const std::string& dir) {
    const auto path = fs::path(dir) / "truth.json";
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "missing truth file " + path.string());
    try {
        const json doc = json::parse(read_file(path.string()));
        TruthFile truth;
        truth.kind = doc.at("kind").get<std::string>();
        if (truth.kind == "regions22") {
            Rng unused(0);
            truth.layout = layout_from_json(doc.dump(), GraphSpec{}, unused);
            return truth;
        }
        const int p = doc.at("p").get<int>();
        std::vector<GraphTruth> graphs;
        for (const auto& g : doc.at("graphs")) graphs.push_back({p, edges_from(g)});
        for (const auto& pt : doc.at("points")) {
            truth.points.push_back(pt.at("x").get<std::vector<double>>());
            truth.graphs.push_back(graphs.at(pt.at("graph").get<std::size_t>()));
        }
        return truth;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
    }
}

}  // namespace gocart
