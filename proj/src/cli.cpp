#include "gocart/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gocart/baselines.hpp"
#include "gocart/errors.hpp"
#include "gocart/evalmetrics.hpp"
#include "gocart/exact.hpp"
#include "gocart/greedy.hpp"
#include "gocart/model_io.hpp"
#include "gocart/simdata.hpp"

namespace gocart::cli {

namespace fs = std::filesystem;

std::map<std::string, std::string> parse_config(const std::string& text) {
    static const std::set<std::string> known = {
        "seed",  "K",         "min_leaf", "num_lambdas", "lambda_ratio", "refit",    "n",        "d",
        "p",     "side",      "num_edges", "max_deg",    "offdiag",      "gamma",    "lambda",   "lambda_x",
        "lambda_y", "bandwidth"};
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Usage, "config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (!known.count(key)) throw Error(ErrorKind::Usage, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

namespace {

// Resolved settings: defaults < config file < (GOCART_SEED for the seed) < flags.
struct Settings {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }

    template <class T>
    T get(const std::string& key, T fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                const auto& v = it->second;
                if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
                if (v == "0" || v == "false" || v == "off" || v == "no") return false;
                throw std::invalid_argument(v);
            } else if constexpr (std::is_integral_v<T>) {
                std::size_t pos = 0;
                const long long v = std::stoll(it->second, &pos);
                if (pos != it->second.size() || v < 0) throw std::invalid_argument(it->second);
                return static_cast<T>(v);
            } else {
                std::size_t pos = 0;
                const double v = std::stod(it->second, &pos);
                if (pos != it->second.size()) throw std::invalid_argument(it->second);
                return static_cast<T>(v);
            }
        } catch (const std::exception&) {
            throw Error(ErrorKind::Usage, "invalid value for '" + key + "': " + it->second);
        }
    }
};

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> flag_values;
};

Settings resolve(const CommonOptions& common) {
    Settings s;
    if (!common.config_path.empty()) s.values = parse_config(read_file(common.config_path));
    if (const char* env = std::getenv("GOCART_SEED"); env != nullptr && *env != '\0') s.values["seed"] = env;
    if (common.seed) s.values["seed"] = std::to_string(*common.seed);
    for (const auto& [k, v] : common.flag_values) s.values[k] = v;
    return s;
}

LeafFitConfig leaf_config(const Settings& s) {
    LeafFitConfig cfg;
    cfg.num_lambdas = s.get("num_lambdas", cfg.num_lambdas);
    cfg.lambda_ratio = s.get("lambda_ratio", cfg.lambda_ratio);
    cfg.refit = s.get("refit", cfg.refit);
    return cfg;
}

GraphSpec graph_spec(const Settings& s) {
    GraphSpec g;
    g.p = s.get("p", g.p);
    g.num_edges = s.get("num_edges", g.num_edges);
    g.max_deg = s.get("max_deg", g.max_deg);
    g.offdiag = s.get("offdiag", g.offdiag);
    return g;
}

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string f;
    while (std::getline(ss, f, ',')) {
        try {
            out.push_back(std::stod(f));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Usage, "--x0 must be a comma-separated list of numbers");
        }
    }
    return out;
}

int cmd_generate(const std::string& kind, const std::string& out_dir, const std::string& layout_path,
                 const Settings& s) {
    Rng rng(s.get<std::uint64_t>("seed", 1));
    const GraphSpec spec = graph_spec(s);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    TruthFile truth;
    truth.kind = kind;
    if (kind == "regions22") {
        std::optional<RegionLayout> layout;
        if (!layout_path.empty()) layout = layout_from_json(read_file(layout_path), spec, rng);
        auto data = gen_regions22(s.get<std::size_t>("n", 10000), s.get<std::size_t>("d", 10), rng, spec, std::move(layout));
        write_csv(data.train, (dir / "train.csv").string());
        write_csv(data.heldout, (dir / "heldout.csv").string());
        truth.layout = std::move(data.truth);
    } else if (kind == "chain" || kind == "grid") {
        EvolveSpec evolve;
        evolve.graph = spec;
        auto data = kind == "chain" ? gen_chain(s.get<std::size_t>("n", 10000), rng, evolve)
                                    : gen_grid(s.get<std::size_t>("side", 100), rng, evolve);
        write_csv(data.train, (dir / "train.csv").string());
        write_csv(data.heldout, (dir / "heldout.csv").string());
        for (std::size_t i = 0; i < data.train.size(); ++i) {
            const auto x = data.train.covariates(i);
            truth.points.emplace_back(x.begin(), x.end());
        }
        truth.graphs = std::move(data.graphs);
    } else {
        throw Error(ErrorKind::Usage, "unknown kind '" + kind + "' (expected regions22, chain or grid)");
    }
    save_truth(truth, spec.offdiag, out_dir);
    return kOk;
}

FittedTree constant_model(std::size_t d, LeafModel model) {
    std::vector<LeafModel> models;
    models.push_back(std::move(model));
    return FittedTree(DyadicTree(d, 0), std::move(models));
}

struct FitArgs {
    std::string method, train_path, heldout_path, out_dir, rescale = "none", x0;
};

int cmd_fit(const FitArgs& args, const Settings& s) {
    static const std::set<std::string> methods = {"greedy", "exact-heldout", "exact-penalized",
                                                  "glasso-pooled", "parametric", "kernel"};
    if (!methods.count(args.method)) throw Error(ErrorKind::Usage, "unknown method '" + args.method + "'");
    if (args.rescale != "none" && args.rescale != "minmax")
        throw Error(ErrorKind::Usage, "--rescale must be none or minmax");
    if (args.method == "kernel" && (args.x0.empty() || !s.has("bandwidth")))
        throw Error(ErrorKind::Usage, "kernel requires --x0 and --bandwidth");
    const bool needs_heldout = args.method == "greedy" || args.method == "exact-heldout" || args.method == "glasso-pooled";
    if (needs_heldout && args.heldout_path.empty())
        throw Error(ErrorKind::Usage, args.method + " requires --heldout");

    Dataset train = read_csv(args.train_path);
    std::optional<Dataset> heldout;
    if (!args.heldout_path.empty()) {
        heldout = read_csv(args.heldout_path);
        if (heldout->dim_x() != train.dim_x() || heldout->dim_y() != train.dim_y())
            throw Error(ErrorKind::Schema, "held-out columns (" + std::to_string(heldout->dim_x()) + " x, " +
                                               std::to_string(heldout->dim_y()) + " y) do not match training (" +
                                               std::to_string(train.dim_x()) + " x, " +
                                               std::to_string(train.dim_y()) + " y)");
    }

    ModelBundle model;
    model.method = args.method;
    if (args.rescale == "minmax") {
        model.rescale = MinMaxScaler::fit(train);
        model.rescale->transform(train);
        if (heldout) model.rescale->transform(*heldout);
    }

    const std::size_t d = train.dim_x();
    const auto leaf = leaf_config(s);
    if (args.method == "greedy") {
        GreedyConfig cfg;
        cfg.K = s.get("K", cfg.K);
        cfg.min_leaf = s.get("min_leaf", cfg.min_leaf);
        cfg.leaf = leaf;
        auto grown = grow(train, *heldout, cfg);
        model.fitted = std::move(grown.fitted);
        model.trace = std::move(grown.trace);
        model.risk_after_split = std::move(grown.risk_after_split);
        model.report.heldout_risk = heldout_risk(model.fitted, *heldout);
    } else if (args.method == "exact-heldout" || args.method == "exact-penalized") {
        ExactConfig cfg;
        cfg.leaf = leaf;
        cfg.min_leaf = s.get("min_leaf", cfg.min_leaf);
        const int K = s.get("K", 2);
        auto result = args.method == "exact-heldout" ? fit_heldout(train, *heldout, K, cfg)
                                                     : fit_penalized(train, K, s.get("gamma", 1.0), cfg);
        std::cerr << args.method << ": evaluated " << result.report.trees_evaluated << " trees\n";
        model.fitted = std::move(result.fitted);
        model.report = result.report;
        if (heldout) model.report.heldout_risk = heldout_risk(model.fitted, *heldout);
    } else if (args.method == "glasso-pooled") {
        model.fitted = constant_model(d, fit_leaf(train, *heldout, root_cell(train, *heldout), leaf));
        model.report.heldout_risk = heldout_risk(model.fitted, *heldout);
    } else {
        LeafModel m;
        if (args.method == "parametric") {
            m.prec = parametric_fit(train, s.get("lambda_x", 0.1), s.get("lambda_y", 0.1));
            m.mu = train.y.colwise().mean().transpose();
        } else {
            auto x0 = parse_point(args.x0);
            if (model.rescale) x0 = model.rescale->apply(x0);
            const double h = s.get("bandwidth", 0.0);
            const auto km = kernel_moments(train, x0, h);
            m.prec = glasso_solve(km.cov, s.get("lambda", 0.1));
            m.mu = km.mean;
        }
        m.n_train = train.size();
        model.fitted = constant_model(d, std::move(m));
        if (heldout) model.report.heldout_risk = heldout_risk(model.fitted, *heldout);
    }
    model.report.method = args.method;
    model.report.leaf_count = model.fitted.leaf_count();
    model.report.empirical_risk = empirical_risk(model.fitted, train);
    if (!heldout) model.report.heldout_risk = std::numeric_limits<double>::quiet_NaN();
    if (model.report.objective == 0.0) model.report.objective = model.report.empirical_risk + model.report.penalty;
    save_model(model, args.out_dir);
    return kOk;
}

int cmd_eval(const std::string& model_dir, const std::string& truth_dir, const std::string& out_path,
             const std::string& run_id) {
    const auto model = load_model(model_dir);
    const auto truth = load_truth(truth_dir);
    const std::size_t d = model.fitted.tree().dims();
    std::string csv = "run,region,precision,recall,f1\n";
    auto row = [&](const std::string& region, const EdgeMetrics& m) {
        csv += run_id + "," + region + "," + format_double(m.precision) + "," + format_double(m.recall) + "," +
               format_double(m.f1) + "\n";
    };
    if (truth.kind == "regions22") {
        for (const auto& r : truth.layout.regions) {
            std::vector<double> centre(d, 0.5);
            for (std::size_t k = 0; k < std::min<std::size_t>(2, d); ++k) centre[k] = 0.5 * (r.rect.lower[k] + r.rect.upper[k]);
            row(std::to_string(r.id), edge_metrics(model.fitted.model_at(model.to_unit(centre)).prec.edges, r.graph.edges));
        }
    } else {
        for (std::size_t i = 0; i < truth.points.size(); ++i) {
            if (truth.points[i].size() != d)
                throw Error(ErrorKind::Schema, "truth covariates do not match the model dimension");
            row(std::to_string(i + 1),
                edge_metrics(model.fitted.model_at(model.to_unit(truth.points[i])).prec.edges, truth.graphs[i].edges));
        }
    }
    write_file_atomic(out_path, csv);
    return kOk;
}

int cmd_export(const std::string& model_dir, const std::string& format, const std::string& out_dir) {
    const auto model = load_model(model_dir);
    const fs::path dir(out_dir);
    if (format == "dot") {
        write_file_atomic((dir / "tree.dot").string(), model_to_dot(model));
    } else if (format == "json") {
        write_file_atomic((dir / "model.json").string(), model_to_json(model));
    } else if (format == "plotdata") {
        const auto& tree = model.fitted.tree();
        const auto part = tree.partition();
        std::string regions = "leaf,x1_lo,x1_hi,x2_lo,x2_hi,n_train,edges\n";
        std::string edges = "leaf,a,b\n";
        for (std::size_t j = 0; j < part.cells.size(); ++j) {
            const auto& c = part.cells[j];
            const double x2_lo = c.dims() > 1 ? c.lower[1] : 0.0, x2_hi = c.dims() > 1 ? c.upper[1] : 1.0;
            const auto& m = model.fitted.models()[j];
            regions += std::to_string(j) + "," + format_double(c.lower[0]) + "," + format_double(c.upper[0]) + "," +
                       format_double(x2_lo) + "," + format_double(x2_hi) + "," + std::to_string(m.n_train) + "," +
                       std::to_string(m.prec.edges.size()) + "\n";
            for (const auto& [a, b] : m.prec.edges)
                edges += std::to_string(j) + "," + std::to_string(a + 1) + "," + std::to_string(b + 1) + "\n";
        }
        std::string risk = "split,heldout_risk\n";
        for (std::size_t k = 0; k < model.risk_after_split.size(); ++k)
            risk += std::to_string(k) + "," + format_double(model.risk_after_split[k]) + "\n";
        write_file_atomic((dir / "plot_regions.csv").string(), regions);
        write_file_atomic((dir / "plot_edges.csv").string(), edges);
        write_file_atomic((dir / "plot_risk.csv").string(), risk);
    } else {
        throw Error(ErrorKind::Usage, "unknown export format '" + format + "' (expected dot, json or plotdata)");
    }
    return kOk;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::TooLarge:
            return kUsage;
        case ErrorKind::NotPositiveDefinite:
        case ErrorKind::NoConvergence:
        case ErrorKind::Infeasible:
            return kNumerical;
        default:
            return kData;
    }
}

template <class T>
void remember(std::map<std::string, std::string>& flags, const std::string& key, const std::optional<T>& v) {
    if (!v) return;
    std::ostringstream os;
    os.precision(17);
    os << *v;
    flags[key] = os.str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Graph-valued regression with dyadic partitioning trees"};
    app.require_subcommand(1);

    CommonOptions common;
    std::optional<std::uint64_t> seed;
    std::optional<int> K, num_lambdas;
    std::optional<std::size_t> min_leaf, n, d, p, side;
    std::optional<double> lambda_ratio, gamma, lambda, lambda_x, lambda_y, bandwidth;
    bool no_refit = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "flat key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed (overrides config and GOCART_SEED)");
    };

    std::string kind, out_dir, layout_path;
    auto* gen = app.add_subcommand("generate", "write synthetic train/held-out data and ground truth");
    gen->add_option("--kind", kind, "regions22 | chain | grid")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--layout", layout_path, "region layout JSON (regions22)")->check(CLI::ExistingFile);
    gen->add_option("--n", n, "rows per split");
    gen->add_option("--d", d, "covariate dimension (regions22)");
    gen->add_option("--p", p, "response dimension");
    gen->add_option("--side", side, "grid side length (grid)");
    add_common(gen);

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit a model and write tree, leaf models and reports");
    fit->add_option("--method", fit_args.method,
                    "greedy | exact-heldout | exact-penalized | glasso-pooled | parametric | kernel")
        ->required();
    fit->add_option("--train", fit_args.train_path, "training CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("--heldout", fit_args.heldout_path, "held-out CSV")->check(CLI::ExistingFile);
    fit->add_option("--out", fit_args.out_dir, "model directory")->required();
    fit->add_option("--rescale", fit_args.rescale, "covariate rescaling: none | minmax");
    fit->add_option("--x0", fit_args.x0, "kernel evaluation point, comma separated");
    fit->add_option("--K", K, "per-dimension dyadic depth");
    fit->add_option("--min-leaf", min_leaf, "minimum rows per leaf");
    fit->add_option("--num-lambdas", num_lambdas, "glasso path length");
    fit->add_option("--lambda-ratio", lambda_ratio, "smallest/largest path lambda");
    fit->add_flag("--no-refit", no_refit, "skip the sparsity-pattern refit");
    fit->add_option("--gamma", gamma, "penalty weight (exact-penalized)");
    fit->add_option("--lambda", lambda, "glasso lambda (kernel)");
    fit->add_option("--lambda-x", lambda_x, "glasso lambda for Omega_X (parametric)");
    fit->add_option("--lambda-y", lambda_y, "glasso lambda for Y|X (parametric)");
    fit->add_option("--bandwidth", bandwidth, "kernel bandwidth");
    add_common(fit);

    std::string model_dir, truth_dir, metrics_out, run_id = "run";
    auto* ev = app.add_subcommand("eval", "precision/recall/F1 of a fitted model against ground truth");
    ev->add_option("--model", model_dir, "model directory")->required();
    ev->add_option("--truth", truth_dir, "directory holding truth.json")->required();
    ev->add_option("--out", metrics_out, "metrics CSV path")->required();
    ev->add_option("--run-id", run_id, "value of the run column");

    std::string format, export_dir;
    auto* ex = app.add_subcommand("export", "render a fitted model as DOT, JSON or plot tables");
    ex->add_option("--model", model_dir, "model directory")->required();
    ex->add_option("--format", format, "dot | json | plotdata")->required();
    ex->add_option("--out", export_dir, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        common.seed = seed;
        auto& f = common.flag_values;
        remember(f, "K", K);
        remember(f, "min_leaf", min_leaf);
        remember(f, "num_lambdas", num_lambdas);
        remember(f, "lambda_ratio", lambda_ratio);
        remember(f, "gamma", gamma);
        remember(f, "lambda", lambda);
        remember(f, "lambda_x", lambda_x);
        remember(f, "lambda_y", lambda_y);
        remember(f, "bandwidth", bandwidth);
        remember(f, "n", n);
        remember(f, "d", d);
        remember(f, "p", p);
        remember(f, "side", side);
        if (no_refit) f["refit"] = "0";

        if (gen->parsed()) return cmd_generate(kind, out_dir, layout_path, resolve(common));
        if (fit->parsed()) return cmd_fit(fit_args, resolve(common));
        if (ev->parsed()) return cmd_eval(model_dir, truth_dir, metrics_out, run_id);
        if (ex->parsed()) return cmd_export(model_dir, format, export_dir);
    } catch (const Error& e) {
        std::cerr << "gocart: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "gocart: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace gocart::cli
