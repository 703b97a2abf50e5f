#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/estimate.hpp"
#include "core/mgraph.hpp"

namespace madj {

// One conditional probability table: `rows` maps an assignment of `parents`
// (values aligned with the sorted parent list) to a probability vector over
// the node's domain, in domain order.
struct Cpt {
    std::vector<NodeId> parents;  // sorted
    std::map<std::vector<std::string>, std::vector<double>> rows;
};

// A discrete structural causal model over an m-graph. Bidirected edges are
// modeled through their canonical latent variables, which need their own
// domains and (root) tables; indicator and selection nodes are binary "0"/"1".
struct Scm {
    MGraph graph;
    std::map<NodeId, std::vector<std::string>> domains;
    std::map<NodeId, Cpt> cpts;
    std::uint64_t seed = 0;
};

// Text format: the graph grammar plus `seed <n>`, `domain <node> <v1> <v2> ...`,
// and `cpt <node> [| <parent>=<value> ...] : <p1> <p2> ...` lines. Every
// variable and latent needs a domain and a complete table; indicator and
// selection nodes default to domain {0, 1}. Fully validated before returning.
Scm parse_scm(const std::string& text);

// Forward (ancestral) sampling of n rows, seeded by scm.seed. Cells of
// partially observed variables are NA where the drawn indicator is 0; rows
// drawn with selection 0 keep only the selection column. Columns: variables
// in name order, each partially observed one followed by its indicator, then
// the selection column. Latents are never emitted.
std::string sample_csv(const Scm& scm, std::size_t n);
Dataset sample(const Scm& scm, std::size_t n);

// Exact P(y | do(x)) by summing the truncated factorization over all
// variables and latents (indicator and selection factors excluded). Errors
// when the joint domain exceeds 2^20 cells.
DistTable true_effect(const Scm& scm, const Assignment& x,
                      const std::vector<std::string>& y_vars);

}  // namespace madj
