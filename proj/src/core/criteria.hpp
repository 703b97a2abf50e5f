#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/dsep.hpp"
#include "core/mgraph.hpp"

namespace madj {

// x and y: nonempty, disjoint sets of substantive variables. z: a possibly
// empty set of substantive variables disjoint from both.
struct Query {
    NodeSet x, y, z;
};

void validate_query(const MGraph& g, const Query& q);

// Outcome of a criterion check. `failed` lists the labels of violated
// conditions in order; `notes` carries one line of evidence per violation.
// `w` is V_m ∩ (x ∪ y ∪ z) and `rw` its indicator set, recorded so callers can
// see what the verdict conditioned on.
struct Verdict {
    bool valid = true;
    std::vector<char> failed;
    std::map<char, std::string> notes;
    NodeSet w;
    NodeSet rw;
};

// Shared transforms and compiled separation engines for a fixed (g, x, y),
// letting callers test many candidate z sets cheaply. Checks mutate internal
// scratch; do not share an instance across threads.
class CriterionContext {
  public:
    CriterionContext(const MGraph& g, const NodeSet& x, const NodeSet& y);

    // Nodes barred from adjustment sets: descendants (in the graph with edges
    // into x removed) of non-x nodes on proper causal paths. Two independent
    // routes to the same set.
    const NodeSet& forbidden_direct() const { return forbidden_direct_; }
    const NodeSet& forbidden_formula() const { return forbidden_formula_; }

    Verdict backdoor(const NodeSet& z);
    Verdict adjustment(const NodeSet& z);
    Verdict m_sufficient(const NodeSet& z);
    Verdict m_criterion(const NodeSet& z);
    Verdict m_criterion_math(const NodeSet& z);
    Verdict ms_criterion(const NodeSet& z);

    const MGraph& graph() const { return g_; }

  private:
    Verdict make_verdict(const NodeSet& z) const;
    void validate_z(const NodeSet& z) const;
    void fail(Verdict& v, char label, std::string note) const;
    // Witness pair for an unblocked connection, for evidence notes.
    std::string connection_note(SepEngine& engine, const NodeSet& a, const NodeSet& b,
                                const NodeSet& c) const;
    NodeSet conditioning_indicators(const Verdict& v, bool with_selection) const;
    void check_bcd(Verdict& v, const NodeSet& z, bool with_selection, bool swap_b);

    MGraph g_;
    NodeSet x_, y_;
    NodeSet vm_;
    std::optional<NodeId> selection_;
    NodeSet forbidden_direct_, forbidden_formula_;
    NodeSet de_x_;  // descendants of x in g, for the backdoor check

    SepEngine eng_g_, eng_pbd_, eng_no_in_x_, eng_no_out_x_;
    // x ∩ An(R_w) per partially observed w (and for the selection node),
    // precomputed so condition (d) is a union plus one separation test.
    std::map<NodeId, NodeSet> x_anc_of_r_;
    NodeSet x_anc_of_sel_;
};

// Backdoor criterion: (a) z avoids descendants of x; (b) z blocks every x-y
// path with an arrowhead at x.
Verdict check_backdoor(const MGraph& g, const Query& q);

// Complete adjustment criterion: (a) z avoids the forbidden descendants of
// proper causal paths; (b) z blocks x from y in the proper backdoor graph.
Verdict check_adjustment(const MGraph& g, const Query& q);

// Sufficient (incomplete) conditions for adjustment under missingness:
// (a) the adjustment criterion holds; (b) y ⊥ rw given x ∪ z; (c) z ⊥ rw.
Verdict check_m_sufficient(const MGraph& g, const Query& q);

// Complete criterion for adjustment recoverability under missingness, with
// conditions (a)-(d). Rejects graphs with a selection node.
Verdict check_m_criterion(const MGraph& g, const Query& q);

// Same criterion stated through the closed-form forbidden-set formula;
// independent implementation kept for cross-validation.
Verdict check_m_criterion_math(const MGraph& g, const Query& q);

// Extension handling selection bias: the selection node joins the indicator
// set in conditions (b)-(d). On selection-free graphs this coincides with
// check_m_criterion.
Verdict check_ms_criterion(const MGraph& g, const Query& q);

}  // namespace madj
