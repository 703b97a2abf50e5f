#include "core/mgraph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

namespace madj {

namespace {

constexpr const char* kRPrefix = "R_";

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

bool has_r_prefix(const std::string& s) {
    return s.rfind(kRPrefix, 0) == 0;
}

std::map<NodeId, std::vector<NodeId>> directed_adjacency(const MGraph& g, bool forward) {
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& [tail, head] : g.directed_edges()) {
        if (forward)
            adj[tail].push_back(head);
        else
            adj[head].push_back(tail);
    }
    return adj;
}

NodeSet closure(const MGraph& g, const NodeSet& seeds, bool forward) {
    auto adj = directed_adjacency(g, forward);
    NodeSet out = seeds;
    std::deque<NodeId> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        auto it = adj.find(n);
        if (it == adj.end()) continue;
        for (const NodeId& next : it->second)
            if (out.insert(next).second) queue.push_back(next);
    }
    return out;
}

void require_known(const MGraph& g, const NodeSet& s, const char* what) {
    for (const NodeId& n : s)
        if (!g.has_node(n)) throw ValidationError(std::string(what) + ": unknown node '" + n + "'");
}

void require_disjoint(const NodeSet& a, const NodeSet& b, const char* what) {
    for (const NodeId& n : a)
        if (b.count(n)) throw ValidationError(std::string(what) + ": sets overlap on '" + n + "'");
}

}  // namespace

const char* kind_token(NodeKind k) {
    switch (k) {
        case NodeKind::FullyObserved: return "obs";
        case NodeKind::PartiallyObserved: return "mis";
        case NodeKind::Missingness: return "missingness";
        case NodeKind::Selection: return "sel";
        case NodeKind::Latent: return "latent";
    }
    return "?";
}

NodeKind MGraph::kind(const NodeId& n) const {
    auto it = kinds_.find(n);
    if (it == kinds_.end()) throw ValidationError("unknown node '" + n + "'");
    return it->second;
}

NodeSet MGraph::nodes_of_kind(NodeKind k) const {
    NodeSet out;
    for (const auto& [n, nk] : kinds_)
        if (nk == k) out.insert(n);
    return out;
}

NodeSet MGraph::v_nodes() const {
    NodeSet out;
    for (const auto& [n, nk] : kinds_)
        if (nk == NodeKind::FullyObserved || nk == NodeKind::PartiallyObserved) out.insert(n);
    return out;
}

std::optional<NodeId> MGraph::selection_node() const {
    for (const auto& [n, nk] : kinds_)
        if (nk == NodeKind::Selection) return n;
    return std::nullopt;
}

NodeId MGraph::r_of(const NodeId& vm) const {
    if (kind(vm) != NodeKind::PartiallyObserved)
        throw ValidationError("node '" + vm + "' is not partially observed");
    return kRPrefix + vm;
}

NodeSet MGraph::r_set(const NodeSet& w) const {
    NodeSet out;
    for (const NodeId& n : w) out.insert(r_of(n));
    return out;
}

NodeSet MGraph::parents(const NodeId& n) const {
    kind(n);
    NodeSet out;
    for (const auto& [tail, head] : directed_)
        if (head == n) out.insert(tail);
    return out;
}

NodeSet MGraph::children(const NodeId& n) const {
    kind(n);
    NodeSet out;
    for (const auto& [tail, head] : directed_)
        if (tail == n) out.insert(head);
    return out;
}

MGraph::Builder& MGraph::Builder::add_node(const NodeId& name, NodeKind k) {
    if (has_r_prefix(name))
        throw ValidationError("node name '" + name + "' uses the reserved R_ prefix");
    add_raw_node(name, k);
    if (k == NodeKind::PartiallyObserved) add_raw_node(kRPrefix + name, NodeKind::Missingness);
    return *this;
}

MGraph::Builder& MGraph::Builder::add_raw_node(const NodeId& name, NodeKind k) {
    if (!g_.kinds_.emplace(name, k).second)
        throw ValidationError("duplicate node '" + name + "'");
    return *this;
}

MGraph::Builder& MGraph::Builder::add_directed(const NodeId& tail, const NodeId& head) {
    if (!g_.directed_.emplace(tail, head).second)
        throw ValidationError("duplicate edge " + tail + " -> " + head);
    return *this;
}

MGraph::Builder& MGraph::Builder::add_bidirected(const NodeId& a, const NodeId& b) {
    auto pair = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    if (!g_.bidirected_.emplace(pair).second)
        throw ValidationError("duplicate edge " + a + " <-> " + b);
    return *this;
}

MGraph MGraph::Builder::build() const {
    const MGraph& g = g_;

    for (const auto& [n, k] : g.kinds_) {
        if (!valid_identifier(n)) throw ValidationError("invalid node name '" + n + "'");
        if (k == NodeKind::Missingness) {
            if (!has_r_prefix(n) || n.size() <= 2)
                throw ValidationError("missingness node '" + n + "' must be named R_<target>");
            NodeId target = n.substr(2);
            auto it = g.kinds_.find(target);
            if (it == g.kinds_.end() || it->second != NodeKind::PartiallyObserved)
                throw ValidationError("missingness node '" + n +
                                      "' has no partially observed target '" + target + "'");
        } else if (has_r_prefix(n)) {
            throw ValidationError("node name '" + n + "' uses the reserved R_ prefix");
        }
        if (k == NodeKind::PartiallyObserved) {
            auto it = g.kinds_.find(kRPrefix + n);
            if (it == g.kinds_.end() || it->second != NodeKind::Missingness)
                throw ValidationError("partially observed node '" + n +
                                      "' lacks its indicator R_" + n);
        }
    }

    NodeSet selections = g.nodes_of_kind(NodeKind::Selection);
    if (selections.size() > 1)
        throw ValidationError("at most one selection node is allowed");

    auto check_endpoint = [&](const NodeId& n, const std::string& edge) {
        if (!g.kinds_.count(n))
            throw ValidationError("edge " + edge + " references unknown node '" + n + "'");
    };
    for (const auto& [tail, head] : g.directed_) {
        std::string desc = tail + " -> " + head;
        check_endpoint(tail, desc);
        check_endpoint(head, desc);
        if (tail == head) throw ValidationError("self loop on '" + tail + "'");
        NodeKind tk = g.kinds_.at(tail);
        NodeKind hk = g.kinds_.at(head);
        if (tk == NodeKind::Selection)
            throw ValidationError("selection node '" + tail + "' may not have outgoing edges");
        if (tk == NodeKind::Missingness &&
            (hk == NodeKind::FullyObserved || hk == NodeKind::PartiallyObserved ||
             hk == NodeKind::Latent))
            throw ValidationError("missingness node '" + tail +
                                  "' may not be a parent of variable '" + head + "'");
        if (hk == NodeKind::Latent)
            throw ValidationError("latent node '" + head + "' may not have parents");
    }
    for (const auto& [a, b] : g.bidirected_) {
        std::string desc = a + " <-> " + b;
        check_endpoint(a, desc);
        check_endpoint(b, desc);
        if (a == b) throw ValidationError("self loop on '" + a + "'");
        if (g.kinds_.at(a) == NodeKind::Latent || g.kinds_.at(b) == NodeKind::Latent)
            throw ValidationError("latent nodes may not carry bidirected edges");
    }

    // Acyclicity via Kahn's algorithm over directed edges.
    std::map<NodeId, int> indegree;
    for (const auto& [n, k] : g.kinds_) indegree[n] = 0;
    for (const auto& [tail, head] : g.directed_) indegree[head]++;
    std::deque<NodeId> ready;
    for (const auto& [n, d] : indegree)
        if (d == 0) ready.push_back(n);
    std::size_t seen = 0;
    auto fwd = directed_adjacency(g, true);
    while (!ready.empty()) {
        NodeId n = ready.front();
        ready.pop_front();
        seen++;
        for (const NodeId& c : fwd[n])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (seen != g.kinds_.size()) throw ValidationError("directed edges form a cycle");

    return g;
}

MGraph parse_mgraph(const std::string& text) {
    MGraph::Builder builder;
    struct PendingEdge {
        NodeId a, b;
        bool bidirected;
        int line;
    };
    std::vector<PendingEdge> edges;
    NodeSet declared;  // node names (with auto-indicators) for edge validation

    std::istringstream input(text);
    std::string line;
    int lineno = 0;
    while (std::getline(input, line)) {
        lineno++;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string directive;
        if (!(fields >> directive)) continue;
        auto fail = [&](const std::string& msg) -> ParseError {
            return ParseError("line " + std::to_string(lineno) + ": " + msg);
        };
        if (directive == "node") {
            std::string name, kind, extra;
            if (!(fields >> name >> kind) || (fields >> extra))
                throw fail("expected 'node <name> obs|mis|sel'");
            try {
                if (kind == "obs")
                    builder.add_node(name, NodeKind::FullyObserved);
                else if (kind == "mis")
                    builder.add_node(name, NodeKind::PartiallyObserved);
                else if (kind == "sel")
                    builder.add_node(name, NodeKind::Selection);
                else
                    throw fail("unknown node kind '" + kind + "'");
            } catch (const ValidationError& e) {
                throw fail(e.what());
            }
            declared.insert(name);
            if (kind == "mis") declared.insert("R_" + name);
        } else if (directive == "edge") {
            std::string a, arrow, b, extra;
            if (!(fields >> a >> arrow >> b) || (fields >> extra))
                throw fail("expected 'edge <a> -> <b>' or 'edge <a> <-> <b>'");
            if (arrow != "->" && arrow != "<->") throw fail("unknown arrow '" + arrow + "'");
            edges.push_back({a, b, arrow == "<->", lineno});
        } else {
            throw fail("unknown directive '" + directive + "'");
        }
    }

    for (const auto& e : edges) {
        std::string desc = e.a + (e.bidirected ? " <-> " : " -> ") + e.b;
        for (const NodeId& endpoint : {e.a, e.b})
            if (!declared.count(endpoint))
                throw ParseError("line " + std::to_string(e.line) + ": edge " + desc +
                                 " references unknown node '" + endpoint + "'");
        try {
            if (e.bidirected)
                builder.add_bidirected(e.a, e.b);
            else
                builder.add_directed(e.a, e.b);
        } catch (const ValidationError& err) {
            throw ParseError("line " + std::to_string(e.line) + ": " + err.what());
        }
    }

    try {
        return builder.build();
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
}

std::string serialize_mgraph(const MGraph& g) {
    std::ostringstream out;
    for (const auto& [n, k] : g.nodes()) {
        switch (k) {
            case NodeKind::FullyObserved:
            case NodeKind::PartiallyObserved:
            case NodeKind::Selection:
                out << "node " << n << ' ' << kind_token(k) << '\n';
                break;
            case NodeKind::Missingness:
                break;  // implied by its mis target
            case NodeKind::Latent:
                throw ValidationError("graph with latent nodes has no text form");
        }
    }
    for (const auto& [tail, head] : g.directed_edges()) out << "edge " << tail << " -> " << head << '\n';
    for (const auto& [a, b] : g.bidirected_edges()) out << "edge " << a << " <-> " << b << '\n';
    return out.str();
}

NodeSet relatives(const MGraph& g, const NodeSet& s, Relation rel) {
    require_known(g, s, "relatives");
    switch (rel) {
        case Relation::Parents: {
            NodeSet out = s;
            for (const NodeId& n : s) out.merge(g.parents(n));
            return out;
        }
        case Relation::Children: {
            NodeSet out = s;
            for (const NodeId& n : s) out.merge(g.children(n));
            return out;
        }
        case Relation::Ancestors:
            return closure(g, s, /*forward=*/false);
        case Relation::Descendants:
            return closure(g, s, /*forward=*/true);
    }
    throw ValidationError("unknown relation");
}

MGraph mutilate(const MGraph& g, const NodeSet& remove_in, const NodeSet& remove_out) {
    require_known(g, remove_in, "mutilate");
    require_known(g, remove_out, "mutilate");
    MGraph::Builder builder;
    for (const auto& [n, k] : g.nodes()) builder.add_raw_node(n, k);
    for (const auto& [tail, head] : g.directed_edges())
        if (!remove_in.count(head) && !remove_out.count(tail)) builder.add_directed(tail, head);
    for (const auto& [a, b] : g.bidirected_edges())
        if (!remove_in.count(a) && !remove_in.count(b)) builder.add_bidirected(a, b);
    return builder.build();
}

MGraph proper_backdoor(const MGraph& g, const NodeSet& x, const NodeSet& y) {
    require_known(g, x, "proper_backdoor");
    require_known(g, y, "proper_backdoor");
    require_disjoint(x, y, "proper_backdoor");
    if (x.empty() || y.empty()) throw ValidationError("proper_backdoor: x and y must be nonempty");

    // Nodes that reach y by a directed path avoiding x: ancestors of y in the
    // node-induced subgraph without x.
    std::map<NodeId, std::vector<NodeId>> rev;
    for (const auto& [tail, head] : g.directed_edges())
        if (!x.count(tail) && !x.count(head)) rev[head].push_back(tail);
    NodeSet reaches_y(y.begin(), y.end());
    std::deque<NodeId> queue(y.begin(), y.end());
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        for (const NodeId& p : rev[n])
            if (reaches_y.insert(p).second) queue.push_back(p);
    }

    MGraph::Builder builder;
    for (const auto& [n, k] : g.nodes()) builder.add_raw_node(n, k);
    for (const auto& [tail, head] : g.directed_edges()) {
        bool first_edge_of_pcp = x.count(tail) && !x.count(head) && reaches_y.count(head);
        if (!first_edge_of_pcp) builder.add_directed(tail, head);
    }
    for (const auto& [a, b] : g.bidirected_edges()) builder.add_bidirected(a, b);
    return builder.build();
}

NodeSet dpcp(const MGraph& g, const NodeSet& x, const NodeSet& y) {
    require_known(g, x, "dpcp");
    require_known(g, y, "dpcp");
    require_disjoint(x, y, "dpcp");
    if (x.empty() || y.empty()) throw ValidationError("dpcp: x and y must be nonempty");

    MGraph no_in_x = mutilate(g, x, {});
    NodeSet de_x = relatives(no_in_x, x, Relation::Descendants);
    for (const NodeId& n : x) de_x.erase(n);
    NodeSet an_y = relatives(no_in_x, y, Relation::Ancestors);
    NodeSet on_proper_paths;
    std::ranges::set_intersection(de_x, an_y,
                                  std::inserter(on_proper_paths, on_proper_paths.end()));
    if (on_proper_paths.empty()) return {};
    return relatives(no_in_x, on_proper_paths, Relation::Descendants);
}

MGraph canonicalize(const MGraph& g) {
    MGraph::Builder builder;
    for (const auto& [n, k] : g.nodes()) builder.add_raw_node(n, k);
    for (const auto& [tail, head] : g.directed_edges()) builder.add_directed(tail, head);
    NodeSet created;
    for (const auto& [a, b] : g.bidirected_edges()) {
        NodeId latent = "L_" + a + "_" + b;
        while (g.has_node(latent) || created.count(latent)) latent += "_";
        created.insert(latent);
        builder.add_raw_node(latent, NodeKind::Latent);
        builder.add_directed(latent, a);
        builder.add_directed(latent, b);
    }
    return builder.build();
}

}  // namespace madj
