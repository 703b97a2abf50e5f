#pragma once

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/mgraph.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& name) {
    const char* dir = std::getenv("MADJ_FIXTURES");
    if (dir == nullptr) {
        throw std::runtime_error("MADJ_FIXTURES must point at the fixture directory");
    }
    return std::string(dir) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline madj::MGraph graph_fixture(const std::string& name) {
    return madj::parse_mgraph(read_file(fixture_path(name)));
}

// Every subset of the pool, smallest-first then lexicographic; handy for
// brute-force comparisons on small graphs.
inline std::vector<madj::NodeSet> all_subsets(const madj::NodeSet& pool) {
    std::vector<madj::NodeId> items(pool.begin(), pool.end());
    std::vector<madj::NodeSet> out;
    std::size_t total = std::size_t{1} << items.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        madj::NodeSet s;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (mask >> i & 1) s.insert(items[i]);
        out.push_back(std::move(s));
    }
    return out;
}

// Layered graph with k independent non-causal X-Y paths V_i1 -> V_i2 -> V_i3;
// every valid covariate set must hit each layer (7 choices per layer) and may
// freely include the side nodes V_1 and V_3, giving 4 * 7^k valid sets.
inline madj::MGraph make_layered(int k) {
    madj::MGraph::Builder b;
    b.add_node("X", madj::NodeKind::FullyObserved);
    b.add_node("Y", madj::NodeKind::FullyObserved);
    b.add_node("V_1", madj::NodeKind::FullyObserved);
    b.add_node("V_2", madj::NodeKind::FullyObserved);
    b.add_node("V_3", madj::NodeKind::FullyObserved);
    b.add_directed("V_1", "X");
    b.add_directed("X", "Y");
    b.add_directed("Y", "V_2");
    b.add_directed("V_3", "V_2");
    for (int i = 1; i <= k; ++i) {
        std::string v1 = "V_" + std::to_string(i) + "1";
        std::string v2 = "V_" + std::to_string(i) + "2";
        std::string v3 = "V_" + std::to_string(i) + "3";
        b.add_node(v1, madj::NodeKind::PartiallyObserved);
        b.add_node(v2, madj::NodeKind::FullyObserved);
        b.add_node(v3, madj::NodeKind::PartiallyObserved);
        b.add_directed(v1, "X");
        b.add_directed(v1, v2);
        b.add_directed(v2, v3);
        b.add_directed(v3, "Y");
        b.add_directed("V_1", "R_" + v1);
        b.add_directed("V_3", "R_" + v3);
    }
    return b.build();
}

// Random m-graphs for property tests: a DAG over a few observed/partially
// observed variables with random bidirected edges and random arrows into the
// indicators; occasionally a selection node. Deterministic in the seed.
struct RandomGraphOptions {
    int min_vars = 3;
    int max_vars = 6;
    double directed_p = 0.35;
    double bidirected_p = 0.12;
    double mis_p = 0.4;
    double r_edge_p = 0.3;
    double selection_p = 0.0;
};

inline madj::MGraph random_mgraph(std::mt19937_64& rng, const RandomGraphOptions& opt = {}) {
    std::uniform_int_distribution<int> var_count(opt.min_vars, opt.max_vars);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    int n = var_count(rng);
    std::vector<std::string> vars;
    std::vector<bool> mis;
    for (int i = 0; i < n; ++i) {
        vars.push_back("V" + std::to_string(i));
        mis.push_back(coin(rng) < opt.mis_p);
    }
    bool with_selection = coin(rng) < opt.selection_p;

    madj::MGraph::Builder b;
    for (int i = 0; i < n; ++i)
        b.add_node(vars[i], mis[i] ? madj::NodeKind::PartiallyObserved
                                   : madj::NodeKind::FullyObserved);
    if (with_selection) b.add_node("S", madj::NodeKind::Selection);

    // Variable DAG along the index order.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (coin(rng) < opt.directed_p) b.add_directed(vars[i], vars[j]);
            if (coin(rng) < opt.bidirected_p) b.add_bidirected(vars[i], vars[j]);
        }
    // Arrows into indicators: variables, earlier indicators, and an occasional
    // indicator-indicator bidirected edge.
    std::vector<int> mis_ids;
    for (int i = 0; i < n; ++i)
        if (mis[i]) mis_ids.push_back(i);
    for (std::size_t a = 0; a < mis_ids.size(); ++a) {
        std::string ra = "R_" + vars[mis_ids[a]];
        for (int i = 0; i < n; ++i)
            if (coin(rng) < opt.r_edge_p) b.add_directed(vars[i], ra);
        for (std::size_t c = a + 1; c < mis_ids.size(); ++c) {
            std::string rc = "R_" + vars[mis_ids[c]];
            if (coin(rng) < opt.r_edge_p / 2) b.add_directed(ra, rc);
            if (coin(rng) < opt.bidirected_p / 2) b.add_bidirected(ra, rc);
        }
        if (coin(rng) < opt.bidirected_p) {
            int other = mis_ids[a] == 0 ? n - 1 : 0;
            if (vars[other] != vars[mis_ids[a]]) b.add_bidirected(vars[other], ra);
        }
    }
    if (with_selection) {
        for (int i = 0; i < n; ++i)
            if (coin(rng) < opt.r_edge_p) b.add_directed(vars[i], "S");
        for (int id : mis_ids)
            if (coin(rng) < opt.r_edge_p / 2) b.add_directed("R_" + vars[id], "S");
    }
    return b.build();
}

}  // namespace testutil
