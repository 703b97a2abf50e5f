#pragma once

#include <functional>
#include <map>
#include <optional>

#include "core/criteria.hpp"
#include "core/mgraph.hpp"

namespace madj {

enum class CriterionMode { M, MS };

// Bounds for separator searches: every returned set must contain i and stay
// within e. Requires i ⊆ e and e disjoint from x ∪ y.
struct SubsetBounds {
    NodeSet i, e;
};

// Some set Z with i ⊆ Z ⊆ e separating x from y, or nullopt if none exists.
// Uses the ancestral candidate (An(x∪y∪i) ∩ e) \ (x∪y), which separates
// whenever any in-bounds separator does.
std::optional<NodeSet> find_sep(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                const SubsetBounds& bounds);

// Receives each streamed set; return false to stop enumeration early.
using SetSink = std::function<bool(const NodeSet&)>;

// Streams exactly the covariate sets z for which the (m or ms) criterion
// holds for (x, y), each once, in a fixed order: the recursion branches on
// the lexicographically smallest undecided variable, include-branch first.
// Delay between consecutive outputs is O(n(n+m)). Returns the count streamed.
std::size_t list_madj(const MGraph& g, const NodeSet& x, const NodeSet& y, CriterionMode mode,
                      const SetSink& sink);

// Minimum-total-weight separator Z with i ⊆ Z ⊆ e, or nullopt. Weights must
// cover e and be nonnegative; i-nodes cost nothing. Reduction: moralized
// ancestral graph, vertex splitting, max-flow; the cut nearest x is returned,
// making the result deterministic. Exact on integer weights.
std::optional<NodeSet> find_min_cost_sep(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                         const SubsetBounds& bounds,
                                         const std::map<NodeId, double>& weights);

// A minimum-size covariate set satisfying the (m or ms) criterion, or nullopt
// if no valid set exists. The result is checked against the criterion before
// being returned; a failure there indicates a bug and raises InternalError.
std::optional<NodeSet> find_min_adj_set(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                        CriterionMode mode);

}  // namespace madj
