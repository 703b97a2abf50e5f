#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "core/errors.hpp"

namespace madj {

// A missingness graph: a causal DAG over substantive variables (fully or
// partially observed), one binary missingness indicator R_<v> per partially
// observed variable v, an optional selection node, and bidirected edges
// standing for unobserved common causes. Latent nodes exist only in graphs
// produced by canonicalize().
enum class NodeKind {
    FullyObserved,
    PartiallyObserved,
    Missingness,
    Selection,
    Latent,
};

using NodeId = std::string;
using NodeSet = std::set<NodeId>;
using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

const char* kind_token(NodeKind k);

class MGraph {
  public:
    class Builder;

    bool has_node(const NodeId& n) const { return kinds_.count(n) != 0; }
    NodeKind kind(const NodeId& n) const;
    const std::map<NodeId, NodeKind>& nodes() const { return kinds_; }
    // Directed edges as (tail, head); bidirected edges normalized so first < second.
    const EdgeSet& directed_edges() const { return directed_; }
    const EdgeSet& bidirected_edges() const { return bidirected_; }

    NodeSet nodes_of_kind(NodeKind k) const;
    // The substantive variables: fully observed plus partially observed.
    NodeSet v_nodes() const;
    std::optional<NodeId> selection_node() const;

    // The missingness indicator of a partially observed node ("R_" + name).
    NodeId r_of(const NodeId& vm) const;
    // Indicators of every partially observed member of w; other kinds in w are
    // rejected.
    NodeSet r_set(const NodeSet& w) const;

    NodeSet parents(const NodeId& n) const;
    NodeSet children(const NodeId& n) const;

    bool operator==(const MGraph& other) const = default;

  private:
    std::map<NodeId, NodeKind> kinds_;
    EdgeSet directed_;
    EdgeSet bidirected_;
};

class MGraph::Builder {
  public:
    // Declares a user-facing node; a PartiallyObserved declaration also
    // creates its R_ indicator. Reserved names (R_*) are rejected here.
    Builder& add_node(const NodeId& name, NodeKind k);
    // Adds a node without the reserved-name/auto-indicator conveniences;
    // for use by transforms that copy already-validated graphs.
    Builder& add_raw_node(const NodeId& name, NodeKind k);
    Builder& add_directed(const NodeId& tail, const NodeId& head);
    Builder& add_bidirected(const NodeId& a, const NodeId& b);
    // Validates every structural invariant and produces the graph.
    MGraph build() const;

  private:
    MGraph g_;
};

// Text format:
//   # comment
//   node <name> obs|mis|sel
//   edge <a> -> <b>
//   edge <a> <-> <b>
// Declaration order is free; `node Z mis` auto-creates R_Z, which edges may
// reference.
MGraph parse_mgraph(const std::string& text);

// Inverse of parse_mgraph for parser-representable graphs (no Latent nodes):
// nodes, then directed edges, then bidirected edges, each lexicographically
// sorted. parse_mgraph(serialize_mgraph(g)) == g.
std::string serialize_mgraph(const MGraph& g);

enum class Relation { Parents, Children, Ancestors, Descendants };

// Parents/Children: the set plus its one-hop neighbors. Ancestors/Descendants:
// reflexive-transitive closure. All along directed edges only.
NodeSet relatives(const MGraph& g, const NodeSet& s, Relation rel);

// Removes every directed edge with head in remove_in, every directed edge
// with tail in remove_out, and every bidirected edge incident to remove_in
// (a bidirected edge carries an arrowhead at both ends; removal keyed on
// arrowheads at the named nodes). Nodes are never removed.
MGraph mutilate(const MGraph& g, const NodeSet& remove_in, const NodeSet& remove_out);

// Removes the first edge of every proper causal path from x to y: each
// directed edge x_i -> c with c outside x that can reach y without re-entering
// x. Bidirected edges are untouched.
MGraph proper_backdoor(const MGraph& g, const NodeSet& x, const NodeSet& y);

// Nodes that must not enter an adjustment set: descendants (taken in the
// graph with edges into x removed) of the non-x nodes lying on proper causal
// paths from x to y.
NodeSet dpcp(const MGraph& g, const NodeSet& x, const NodeSet& y);

// Replaces each bidirected edge a <-> b by a fresh Latent node with directed
// edges to a and b. Idempotent; the result has no bidirected edges.
MGraph canonicalize(const MGraph& g);

}  // namespace madj
