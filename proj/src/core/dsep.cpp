#include "core/dsep.hpp"

#include <bit>
#include <string>

namespace madj {

namespace {

void validate_query(const MGraph& g, const SepQuery& q) {
    if (q.a.empty() || q.b.empty())
        throw ValidationError("separation query: a and b must be nonempty");
    auto check = [&](const NodeSet& s, const char* label) {
        for (const NodeId& n : s) {
            if (!g.has_node(n))
                throw ValidationError(std::string("separation query: unknown node '") + n +
                                      "' in " + label);
            if (g.kind(n) == NodeKind::Latent)
                throw ValidationError(std::string("separation query: latent node '") + n +
                                      "' not allowed in " + label);
        }
    };
    check(q.a, "a");
    check(q.b, "b");
    check(q.c, "c");
    auto disjoint = [](const NodeSet& s, const NodeSet& t, const char* what) {
        for (const NodeId& n : s)
            if (t.count(n))
                throw ValidationError(std::string("separation query: '") + n + "' appears in " +
                                      what);
    };
    disjoint(q.a, q.b, "both a and b");
    disjoint(q.a, q.c, "both a and c");
    disjoint(q.b, q.c, "both b and c");
}

}  // namespace

SepEngine::SepEngine(const MGraph& g) {
    MGraph canon = canonicalize(g);
    names_.reserve(canon.nodes().size());
    for (const auto& [n, k] : canon.nodes()) {
        index_.emplace(n, static_cast<int>(names_.size()));
        names_.push_back(n);
    }
    int n = node_count();
    parents_.resize(n);
    children_.resize(n);
    for (const auto& [tail, head] : canon.directed_edges()) {
        int t = index_.at(tail);
        int h = index_.at(head);
        children_[t].push_back(h);
        parents_[h].push_back(t);
    }
    in_b_.assign(n, 0);
    in_c_.assign(n, 0);
    anc_c_.assign(n, 0);
    seen_head_.assign(n, 0);
    seen_tail_.assign(n, 0);
    anc_seen_.assign(n, 0);
}

int SepEngine::id_of(const NodeId& n) const {
    auto it = index_.find(n);
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> SepEngine::ids_of(const NodeSet& s) const {
    std::vector<int> out;
    out.reserve(s.size());
    for (const NodeId& n : s) {
        int id = id_of(n);
        if (id < 0) throw ValidationError("unknown node '" + n + "'");
        out.push_back(id);
    }
    return out;
}

void SepEngine::stamp(std::vector<std::uint32_t>& marks, const std::vector<int>& ids) {
    for (int v : ids) marks[v] = version_;
}

bool SepEngine::separated(const std::vector<int>& a, const std::vector<int>& b,
                          const std::vector<int>& c) {
    if (a.empty() || b.empty()) return true;
    version_++;
    stamp(in_b_, b);
    stamp(in_c_, c);

    // Reflexive ancestors of c; conditioned colliders and colliders with a
    // conditioned descendant pass traffic between their parents.
    queue_.clear();
    for (int v : c) {
        anc_c_[v] = version_;
        queue_.push_back(v);
    }
    for (std::size_t i = 0; i < queue_.size(); ++i)
        for (int p : parents_[queue_[i]])
            if (anc_c_[p] != version_) {
                anc_c_[p] = version_;
                queue_.push_back(p);
            }

    // Walk (node, arrival) states. Arrival kHead: the last edge points at the
    // node, so it continues as a chain (if unconditioned) or as a collider (if
    // it has a conditioned descendant). Arrival kTail: the last edge leaves
    // the node, so it continues either way when unconditioned.
    constexpr std::uint32_t kHead = 0, kTail = 1;
    queue_.clear();
    queue_dir_.clear();
    auto push = [&](int v, std::uint32_t dir) {
        auto& seen = dir == kHead ? seen_head_ : seen_tail_;
        if (seen[v] == version_) return;
        seen[v] = version_;
        queue_.push_back(v);
        queue_dir_.push_back(dir);
    };
    for (int v : a) push(v, kTail);
    for (std::size_t i = 0; i < queue_.size(); ++i) {
        int v = queue_[i];
        std::uint32_t dir = queue_dir_[i];
        if (stamped(in_b_, v)) return false;
        bool conditioned = stamped(in_c_, v);
        if (dir == kHead) {
            if (!conditioned)
                for (int w : children_[v]) push(w, kHead);
            if (stamped(anc_c_, v))
                for (int w : parents_[v]) push(w, kTail);
        } else if (!conditioned) {
            for (int w : children_[v]) push(w, kHead);
            for (int w : parents_[v]) push(w, kTail);
        }
    }
    return true;
}

void SepEngine::ancestors_into(const std::vector<int>& seeds, std::vector<int>& out) {
    version_++;
    out.clear();
    for (int v : seeds)
        if (anc_seen_[v] != version_) {
            anc_seen_[v] = version_;
            out.push_back(v);
        }
    for (std::size_t i = 0; i < out.size(); ++i)
        for (int p : parents_[out[i]])
            if (anc_seen_[p] != version_) {
                anc_seen_[p] = version_;
                out.push_back(p);
            }
}

bool d_separated(const MGraph& g, const SepQuery& q) {
    validate_query(g, q);
    SepEngine engine(g);
    return engine.separated(engine.ids_of(q.a), engine.ids_of(q.b), engine.ids_of(q.c));
}

namespace {

// Depth-first enumeration of simple paths over the canonical skeleton with
// incremental blocking: a prefix whose newest interior node is blocked can
// never extend to an active path, so it is abandoned immediately.
struct PathSearch {
    const std::vector<std::uint32_t>& kids;  // kids[u] bit v: edge u -> v
    const std::vector<std::uint32_t>& nbrs;  // skeleton adjacency
    const std::vector<std::uint32_t>& desc;  // reflexive descendants
    std::uint32_t b_mask, c_mask;
    std::vector<int> path;
    std::uint32_t on_path = 0;

    bool child(int u, int v) const { return kids[u] >> v & 1u; }

    bool extend(int v) {
        std::uint32_t options = nbrs[v] & ~on_path;
        while (options) {
            int w = std::countr_zero(options);
            options &= options - 1;
            if (path.size() >= 2) {
                // Appending w makes v interior between u and w.
                int u = path[path.size() - 2];
                bool collider = child(u, v) && child(w, v);
                bool active = collider ? (desc[v] & c_mask) != 0 : (c_mask >> v & 1u) == 0;
                if (!active) continue;
            }
            if (b_mask >> w & 1u) return true;
            path.push_back(w);
            on_path |= 1u << w;
            if (extend(w)) return true;
            path.pop_back();
            on_path &= ~(1u << w);
        }
        return false;
    }
};

}  // namespace

bool d_separated_oracle(const MGraph& g, const SepQuery& q) {
    validate_query(g, q);
    MGraph canon = canonicalize(g);
    int n = static_cast<int>(canon.nodes().size());
    if (n > 14)
        throw TooLargeError("canonical graph has " + std::to_string(n) +
                            " nodes; the path-enumeration oracle allows at most 14");

    std::map<NodeId, int> index;
    for (const auto& [name, k] : canon.nodes()) index.emplace(name, static_cast<int>(index.size()));
    std::vector<std::uint32_t> kids(n, 0), nbrs(n, 0), desc(n, 0);
    for (const auto& [tail, head] : canon.directed_edges()) {
        int t = index.at(tail);
        int h = index.at(head);
        kids[t] |= 1u << h;
        nbrs[t] |= 1u << h;
        nbrs[h] |= 1u << t;
    }
    for (int v = 0; v < n; ++v) desc[v] = 1u << v;
    for (bool changed = true; changed;) {
        changed = false;
        for (int u = 0; u < n; ++u) {
            std::uint32_t mask = kids[u];
            while (mask) {
                int v = std::countr_zero(mask);
                mask &= mask - 1;
                std::uint32_t grown = desc[u] | desc[v];
                if (grown != desc[u]) {
                    desc[u] = grown;
                    changed = true;
                }
            }
        }
    }

    auto mask_of = [&](const NodeSet& s) {
        std::uint32_t m = 0;
        for (const NodeId& node : s) m |= 1u << index.at(node);
        return m;
    };
    std::uint32_t b_mask = mask_of(q.b), c_mask = mask_of(q.c);
    for (const NodeId& a : q.a) {
        int start = index.at(a);
        PathSearch search{kids, nbrs, desc, b_mask, c_mask, {start}, 1u << start};
        if (search.extend(start)) return false;
    }
    return true;
}

}  // namespace madj
