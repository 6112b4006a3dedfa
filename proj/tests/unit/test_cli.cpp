#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <string>

#include "gocart/cli.hpp"
#include "gocart/dataset.hpp"
#include "gocart/model_io.hpp"

using namespace gocart;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GOCART_CLI_PATH;

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("gocart_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int sh(const std::string& args, const fs::path& log = {}) {
    std::string cmd = kCli + " " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("parse_config") {
    const auto kv = cli::parse_config("# comment\nseed = 4\n\n  K=3  # trailing\nrefit = false\n");
    CHECK(kv.at("seed") == "4");
    CHECK(kv.at("K") == "3");
    CHECK(kv.at("refit") == "false");
    CHECK(kv.size() == 3);
    CHECK_THROWS(cli::parse_config("no_equals_sign\n"));
}

TEST_CASE("generate writes the requested shapes") {
    const auto dir = scratch("generate");
    REQUIRE(sh("generate --kind regions22 --n 200 --d 3 --p 8 --seed 1 --out " + q(dir / "r")) == 0);
    const auto train = read_csv((dir / "r" / "train.csv").string());
    CHECK(train.size() == 200);
    CHECK(train.dim_x() == 3);
    CHECK(train.dim_y() == 8);
    CHECK(lines(dir / "r" / "train.csv").front() == "x1,x2,x3,y1,y2,y3,y4,y5,y6,y7,y8");
    CHECK(read_csv((dir / "r" / "heldout.csv").string()).size() == 200);
    const auto truth = load_truth((dir / "r").string());
    CHECK(truth.kind == "regions22");
    CHECK(truth.layout.regions.size() == 22);

    REQUIRE(sh("generate --kind chain --n 300 --seed 1 --out " + q(dir / "c")) == 0);
    const auto chain = read_csv((dir / "c" / "train.csv").string());
    CHECK(chain.dim_x() == 1);
    CHECK(chain.dim_y() == 20);
    CHECK(load_truth((dir / "c").string()).graphs.size() == 300);

    REQUIRE(sh("generate --kind grid --side 8 --p 6 --seed 1 --out " + q(dir / "g")) == 0);
    CHECK(read_csv((dir / "g" / "train.csv").string()).size() == 64);

    CHECK(sh("generate --kind spiral --out " + q(dir / "s")) == 1);
    CHECK(sh("generate --out " + q(dir / "s")) == 1);
    CHECK(sh("frobnicate") == 1);
}

TEST_CASE("fit: greedy writes tree, leaves, reports and trace") {
    const auto dir = scratch("fit");
    REQUIRE(sh("generate --kind regions22 --n 600 --d 2 --p 8 --seed 2 --out " + q(dir / "data")) == 0);
    const auto data = dir / "data";
    REQUIRE(sh("fit --method greedy --K 2 --num-lambdas 8 --train " + q(data / "train.csv") + " --heldout " +
               q(data / "heldout.csv") + " --out " + q(dir / "m")) == 0);
    for (const char* f : {"tree.json", "risk.csv", "trace.csv", "splits.csv", "leaves/leaf_0.json"})
        CHECK(fs::exists(dir / "m" / f));
    const auto model = load_model((dir / "m").string());
    CHECK(model.method == "greedy");
    CHECK(model.fitted.tree().dims() == 2);
    CHECK(model.fitted.models().front().prec.omega.rows() == 8);
    CHECK(lines(dir / "m" / "trace.csv").front() == "node,dim,gain,accepted");
    CHECK(lines(dir / "m" / "splits.csv").size() == model.fitted.leaf_count() + 1);

    // Held-out is mandatory for greedy.
    CHECK(sh("fit --method greedy --train " + q(data / "train.csv") + " --out " + q(dir / "m2")) == 1);
    CHECK(sh("fit --method nonsense --train " + q(data / "train.csv") + " --out " + q(dir / "m2")) == 1);
}

TEST_CASE("fit: exact-heldout logs its candidate count") {
    const auto dir = scratch("exact");
    REQUIRE(sh("generate --kind chain --n 200 --p 8 --seed 3 --out " + q(dir / "data")) == 0);
    const auto log = dir / "log.txt";
    REQUIRE(sh("fit --method exact-heldout --K 1 --num-lambdas 6 --train " + q(dir / "data" / "train.csv") +
                   " --heldout " + q(dir / "data" / "heldout.csv") + " --out " + q(dir / "m"),
               log) == 0);
    CHECK(slurp(log).find("evaluated 2 trees") != std::string::npos);
}

TEST_CASE("fit: kernel needs --x0 and --bandwidth") {
    const auto dir = scratch("kernel");
    REQUIRE(sh("generate --kind chain --n 100 --p 8 --seed 4 --out " + q(dir / "data")) == 0);
    const auto train = q(dir / "data" / "train.csv");
    CHECK(sh("fit --method kernel --bandwidth 0.1 --train " + train + " --out " + q(dir / "m")) == 1);
    CHECK(sh("fit --method kernel --x0 0.5 --train " + train + " --out " + q(dir / "m")) == 1);
    CHECK(sh("fit --method kernel --x0 0.5 --bandwidth 0.1 --train " + train + " --out " + q(dir / "m")) == 0);
    CHECK(load_model((dir / "m").string()).fitted.leaf_count() == 1);
    CHECK(sh("fit --method parametric --train " + train + " --out " + q(dir / "p")) == 0);
    CHECK(sh("fit --method exact-penalized --K 1 --gamma 0.5 --num-lambdas 5 --train " + train + " --out " +
             q(dir / "e")) == 0);
}

TEST_CASE("fit: held-out schema mismatch is a data error") {
    const auto dir = scratch("schema");
    REQUIRE(sh("generate --kind chain --n 50 --p 8 --seed 5 --out " + q(dir / "a")) == 0);
    REQUIRE(sh("generate --kind chain --n 50 --p 9 --seed 5 --out " + q(dir / "b")) == 0);
    const auto log = dir / "log.txt";
    CHECK(sh("fit --method glasso-pooled --train " + q(dir / "a" / "train.csv") + " --heldout " +
                 q(dir / "b" / "heldout.csv") + " --out " + q(dir / "m"),
             log) == 2);
    CHECK(slurp(log).find("9 y") != std::string::npos);
}

TEST_CASE("eval: a perfect model scores one everywhere") {
    const auto dir = scratch("eval");
    // Two regions split at x1 = 1/2 with known graphs.
    std::ofstream(dir / "layout.json") << R"({"p": 4, "offdiag": 0.245, "regions": [
        {"id": 1, "lower": [0, 0], "upper": [0.5, 1], "edges": [[0, 1], [1, 2]]},
        {"id": 2, "lower": [0.5, 0], "upper": [1, 1], "edges": [[0, 3]]}]})";
    REQUIRE(sh("generate --kind regions22 --layout " + q(dir / "layout.json") + " --n 100 --d 2 --seed 6 --out " +
               q(dir / "truth")) == 0);
    const auto truth = load_truth((dir / "truth").string());
    REQUIRE(truth.layout.regions.size() == 2);
    CHECK(truth.layout.regions[1].graph.edges == EdgeSet{{0, 3}});

    // Vertex indices are 0-based and must stay below p.
    std::ofstream(dir / "bad.json") << R"({"p": 4, "regions": [
        {"lower": [0, 0], "upper": [1, 1], "edges": [[1, 4]]}]})";
    CHECK(sh("generate --kind regions22 --layout " + q(dir / "bad.json") + " --n 10 --d 2 --out " + q(dir / "bad")) == 2);

    DyadicTree tree(2, 1);
    tree.split_leaf(0, 0);
    std::vector<LeafModel> leaves;
    for (const auto& r : truth.layout.regions) {
        LeafModel m;
        m.mu = Vector::Zero(4);
        m.prec.omega = r.omega;
        m.prec.sigma = r.omega.inverse();
        m.prec.edges = r.graph.edges;
        leaves.push_back(m);
    }
    ModelBundle model;
    model.method = "greedy";
    model.fitted = FittedTree(tree, leaves);
    save_model(model, (dir / "model").string());

    REQUIRE(sh("eval --model " + q(dir / "model") + " --truth " + q(dir / "truth") + " --run-id 7 --out " +
               q(dir / "metrics.csv")) == 0);
    const auto rows = lines(dir / "metrics.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "run,region,precision,recall,f1");
    CHECK(rows[1] == "7,1,1,1,1");
    CHECK(rows[2] == "7,2,1,1,1");

    CHECK(sh("eval --model " + q(dir / "model") + " --truth " + q(dir / "nowhere") + " --out " +
             q(dir / "m2.csv")) == 2);
}

TEST_CASE("eval: regions22 emits one row per region") {
    const auto dir = scratch("eval22");
    REQUIRE(sh("generate --kind regions22 --n 400 --d 2 --p 8 --seed 8 --out " + q(dir / "data")) == 0);
    REQUIRE(sh("fit --method glasso-pooled --num-lambdas 5 --train " + q(dir / "data" / "train.csv") +
               " --heldout " + q(dir / "data" / "heldout.csv") + " --out " + q(dir / "m")) == 0);
    REQUIRE(sh("eval --model " + q(dir / "m") + " --truth " + q(dir / "data") + " --out " + q(dir / "e.csv")) == 0);
    CHECK(lines(dir / "e.csv").size() == 23);
}

TEST_CASE("export") {
    const auto dir = scratch("export");
    REQUIRE(sh("generate --kind regions22 --n 800 --d 2 --p 8 --seed 9 --out " + q(dir / "data")) == 0);
    const auto data = dir / "data";
    REQUIRE(sh("fit --method greedy --K 2 --num-lambdas 6 --train " + q(data / "train.csv") + " --heldout " +
               q(data / "heldout.csv") + " --out " + q(dir / "m")) == 0);
    REQUIRE(sh("export --model " + q(dir / "m") + " --format dot --out " + q(dir / "x")) == 0);
    REQUIRE(sh("export --model " + q(dir / "m") + " --format json --out " + q(dir / "x")) == 0);
    REQUIRE(sh("export --model " + q(dir / "m") + " --format plotdata --out " + q(dir / "x")) == 0);
    CHECK(sh("export --model " + q(dir / "m") + " --format svg --out " + q(dir / "x")) != 0);

    // DOT: a digraph of node statements and edge statements only.
    const auto dot = lines(dir / "x" / "tree.dot");
    REQUIRE(dot.size() >= 3);
    CHECK(dot.front() == "digraph gocart {");
    CHECK(dot.back() == "}");
    const std::regex node_stmt(R"(  n\d+ \[label="[^"]*"\];)"), edge_stmt(R"(  n\d+ -> n\d+;)");
    std::size_t nodes = 0, edges = 0;
    for (std::size_t i = 1; i + 1 < dot.size(); ++i) {
        if (dot[i] == "  node [shape=box];") continue;
        nodes += std::regex_match(dot[i], node_stmt);
        edges += std::regex_match(dot[i], edge_stmt);
        CHECK((std::regex_match(dot[i], node_stmt) || std::regex_match(dot[i], edge_stmt)));
    }
    const auto model = load_model((dir / "m").string());
    CHECK(nodes == model.fitted.tree().nodes().size());
    CHECK(edges == nodes - 1);

    CHECK(slurp(dir / "x" / "model.json").find("\"root\"") != std::string::npos);
    const auto regions = lines(dir / "x" / "plot_regions.csv");
    CHECK(regions.front() == "leaf,x1_lo,x1_hi,x2_lo,x2_hi,n_train,edges");
    CHECK(regions.size() == model.fitted.leaf_count() + 1);
    CHECK(lines(dir / "x" / "plot_edges.csv").front() == "leaf,a,b");
    CHECK(lines(dir / "x" / "plot_risk.csv").size() == model.fitted.leaf_count() + 1);

    // A root-only model renders as a single node.
    REQUIRE(sh("fit --method glasso-pooled --num-lambdas 5 --train " + q(data / "train.csv") + " --heldout " +
               q(data / "heldout.csv") + " --out " + q(dir / "pooled")) == 0);
    REQUIRE(sh("export --model " + q(dir / "pooled") + " --format dot --out " + q(dir / "y")) == 0);
    const auto one = lines(dir / "y" / "tree.dot");
    CHECK(one.size() == 4);
    CHECK(std::regex_match(one[2], node_stmt));
}

TEST_CASE("pipeline is byte-identical under a fixed seed") {
    const auto dir = scratch("determinism");
    for (const char* run : {"a", "b"}) {
        const auto r = dir / run;
        REQUIRE(sh("generate --kind regions22 --n 500 --d 3 --p 8 --seed 11 --out " + q(r / "data")) == 0);
        REQUIRE(sh("fit --method greedy --K 2 --num-lambdas 6 --train " + q(r / "data" / "train.csv") +
                   " --heldout " + q(r / "data" / "heldout.csv") + " --out " + q(r / "m")) == 0);
        REQUIRE(sh("eval --model " + q(r / "m") + " --truth " + q(r / "data") + " --out " + q(r / "e.csv")) == 0);
        REQUIRE(sh("export --model " + q(r / "m") + " --format dot --out " + q(r / "x")) == 0);
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir / "a");
        CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / rel), rel.string());
        ++compared;
    }
    CHECK(compared >= 10);
}

TEST_CASE("seed precedence: config < GOCART_SEED < --seed") {
    const auto dir = scratch("seed");
    std::ofstream(dir / "cfg.txt") << "seed = 1\nn = 20\n";
    const auto gen = [&](const std::string& env, const std::string& extra, const std::string& out) {
        const std::string cmd = env + " " + kCli + " generate --kind chain --p 8 --config " + q(dir / "cfg.txt") +
                                " " + extra + " --out " + q(dir / out) + " >/dev/null 2>&1";
        REQUIRE(std::system(cmd.c_str()) == 0);
        return slurp(dir / out / "train.csv");
    };
    const auto from_cfg = gen("env -u GOCART_SEED", "", "cfg");
    const auto from_env = gen("GOCART_SEED=2", "", "env");
    const auto from_flag = gen("GOCART_SEED=2", "--seed 3", "flag");
    CHECK(lines(dir / "cfg" / "train.csv").size() == 21);
    CHECK(from_cfg != from_env);
    CHECK(from_env != from_flag);
    CHECK(from_cfg == gen("env -u GOCART_SEED", "--seed 1", "cfg1"));
    CHECK(from_env == gen("env -u GOCART_SEED", "--seed 2", "env2"));
    CHECK(from_flag == gen("GOCART_SEED=9", "--seed 3", "flag3"));

    std::ofstream(dir / "bad.txt") << "sede = 1\n";
    CHECK(sh("generate --kind chain --config " + q(dir / "bad.txt") + " --out " + q(dir / "bad")) == 1);
}

TEST_CASE("minmax rescaling round-trips lon/lat style covariates") {
    const auto dir = scratch("rescale");
    // 125 synthetic sites on an irregular lon/lat patch; response regimes
    // change at the patch's mid-longitude.
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> lon(-125.0, -65.0), lat(25.0, 50.0);
    std::normal_distribution<double> g(0.0, 1.0);
    for (const char* split : {"train.csv", "heldout.csv"}) {
        auto data = Dataset::with_shape(125, 2, 3);
        for (Eigen::Index i = 0; i < 125; ++i) {
            data.x(i, 0) = lon(rng);
            data.x(i, 1) = lat(rng);
            const double shift = data.x(i, 0) < -95.0 ? 4.0 : -4.0;
            for (Eigen::Index j = 0; j < 3; ++j) data.y(i, j) = shift + g(rng);
        }
        write_csv(data, (dir / split).string());
        const auto back = read_csv((dir / split).string());
        CHECK(back.x == data.x);
        CHECK(back.y == data.y);
    }
    // Raw coordinates lie outside [0,1]: without rescaling they are rejected.
    CHECK(sh("fit --method greedy --min-leaf 5 --num-lambdas 5 --train " + q(dir / "train.csv") + " --heldout " +
             q(dir / "heldout.csv") + " --out " + q(dir / "raw")) == 2);
    REQUIRE(sh("fit --method greedy --rescale minmax --K 2 --min-leaf 5 --num-lambdas 5 --train " +
               q(dir / "train.csv") + " --heldout " + q(dir / "heldout.csv") + " --out " + q(dir / "m")) == 0);

    const auto model = load_model((dir / "m").string());
    REQUIRE(model.rescale.has_value());
    const auto train = read_csv((dir / "train.csv").string());
    for (Eigen::Index k = 0; k < 2; ++k) {
        CHECK(model.rescale->min[static_cast<std::size_t>(k)] == train.x.col(k).minCoeff());
        CHECK(model.rescale->max[static_cast<std::size_t>(k)] == train.x.col(k).maxCoeff());
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto u = model.to_unit(train.covariates(i));
        for (double v : u) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    // The split lands between the two regimes, so raw points on either side
    // of -95 get different mean vectors.
    const double west[] = {-120.0, 30.0}, east[] = {-70.0, 30.0};
    const auto& mw = model.fitted.model_at(model.to_unit(west)).mu;
    const auto& me = model.fitted.model_at(model.to_unit(east)).mu;
    CHECK(mw(0) > 2.0);
    CHECK(me(0) < -2.0);
}
