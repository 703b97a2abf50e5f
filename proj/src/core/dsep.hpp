#pragma once

#include <cstdint>
#include <vector>

#include "core/mgraph.hpp"

namespace madj {

// a and b must be nonempty; a, b, c pairwise disjoint; no Latent node in any
// of them.
struct SepQuery {
    NodeSet a, b, c;
};

// Reachability engine over the canonical form (bidirected edges replaced by
// latents) of a fixed graph. Construction canonicalizes and indexes once;
// queries are linear in the canonical size. Queries reuse internal scratch,
// so a single instance must not be queried from two threads at once.
class SepEngine {
  public:
    explicit SepEngine(const MGraph& g);

    int node_count() const { return static_cast<int>(names_.size()); }
    const NodeId& name(int id) const { return names_[id]; }
    // -1 when the node does not exist.
    int id_of(const NodeId& n) const;
    // Validating batch lookup.
    std::vector<int> ids_of(const NodeSet& s) const;
    const std::vector<int>& parents_of(int id) const { return parents_[id]; }
    const std::vector<int>& children_of(int id) const { return children_[id]; }

    // True when every path between a and b is blocked by c. Empty a or b is
    // vacuously separated.
    bool separated(const std::vector<int>& a, const std::vector<int>& b,
                   const std::vector<int>& c);

    // Reflexive ancestor closure of seeds, appended to out in discovery order.
    void ancestors_into(const std::vector<int>& seeds, std::vector<int>& out);

  private:
    void stamp(std::vector<std::uint32_t>& marks, const std::vector<int>& ids);
    bool stamped(const std::vector<std::uint32_t>& marks, int id) const {
        return marks[id] == version_;
    }

    std::vector<NodeId> names_;
    std::map<NodeId, int> index_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;

    std::uint32_t version_ = 0;
    std::vector<std::uint32_t> in_b_, in_c_, anc_c_, seen_head_, seen_tail_, anc_seen_;
    std::vector<int> queue_;
    std::vector<std::uint32_t> queue_dir_;
};

// Linear-time d-separation via reachability on the canonical graph.
bool d_separated(const MGraph& g, const SepQuery& q);

// Independent check by enumerating simple paths in the canonical skeleton and
// applying the blocking rules per path. Guarded: the canonical graph may have
// at most 14 nodes.
bool d_separated_oracle(const MGraph& g, const SepQuery& q);

}  // namespace madj
