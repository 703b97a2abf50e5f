#include "core/criteria.hpp"

#include <algorithm>
#include <deque>
#include <iterator>
#include <sstream>

namespace madj {

namespace {

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
    NodeSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

NodeSet set_intersect(const NodeSet& a, const NodeSet& b) {
    NodeSet out;
    std::ranges::set_intersection(a, b, std::inserter(out, out.end()));
    return out;
}

std::string join(const NodeSet& s) {
    std::ostringstream out;
    for (auto it = s.begin(); it != s.end(); ++it) {
        if (it != s.begin()) out << ", ";
        out << *it;
    }
    return out.str();
}

bool is_variable(NodeKind k) {
    return k == NodeKind::FullyObserved || k == NodeKind::PartiallyObserved;
}

// Non-x nodes lying on a proper causal path from x to y: reachable from x by
// directed paths that never re-enter x, and reaching y the same way.
NodeSet proper_path_nodes(const MGraph& g, const NodeSet& x, const NodeSet& y) {
    std::map<NodeId, std::vector<NodeId>> fwd, rev;
    for (const auto& [tail, head] : g.directed_edges()) {
        if (x.count(head)) continue;  // paths may not re-enter x
        if (!x.count(tail)) fwd[tail].push_back(head);
        rev[head].push_back(tail);
    }
    NodeSet from_x;
    std::deque<NodeId> queue;
    for (const NodeId& xi : x)
        for (const NodeId& c : g.children(xi))
            if (!x.count(c) && from_x.insert(c).second) queue.push_back(c);
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        for (const NodeId& next : fwd[n])
            if (from_x.insert(next).second) queue.push_back(next);
    }
    NodeSet to_y(y.begin(), y.end());
    queue.assign(y.begin(), y.end());
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        for (const NodeId& p : rev[n])
            if (!x.count(p) && to_y.insert(p).second) queue.push_back(p);
    }
    return set_intersect(from_x, to_y);
}

const MGraph& with_query_checked(const MGraph& g, const NodeSet& x, const NodeSet& y) {
    validate_query(g, Query{x, y, {}});
    return g;
}

}  // namespace

void validate_query(const MGraph& g, const Query& q) {
    if (q.x.empty() || q.y.empty()) throw ValidationError("query: x and y must be nonempty");
    auto check = [&](const NodeSet& s, const char* label) {
        for (const NodeId& n : s) {
            if (!g.has_node(n))
                throw ValidationError(std::string("query: unknown node '") + n + "' in " + label);
            if (!is_variable(g.kind(n)))
                throw ValidationError(std::string("query: node '") + n + "' in " + label +
                                      " is not a substantive variable");
        }
    };
    check(q.x, "x");
    check(q.y, "y");
    check(q.z, "z");
    auto disjoint = [](const NodeSet& s, const NodeSet& t, const char* what) {
        for (const NodeId& n : s)
            if (t.count(n))
                throw ValidationError(std::string("query: '") + n + "' appears in both " + what);
    };
    disjoint(q.x, q.y, "x and y");
    disjoint(q.x, q.z, "x and z");
    disjoint(q.y, q.z, "y and z");
}

CriterionContext::CriterionContext(const MGraph& g, const NodeSet& x, const NodeSet& y)
    : g_(with_query_checked(g, x, y)),
      x_(x),
      y_(y),
      vm_(g_.nodes_of_kind(NodeKind::PartiallyObserved)),
      selection_(g_.selection_node()),
      forbidden_formula_(dpcp(g_, x_, y_)),
      de_x_(relatives(g_, x_, Relation::Descendants)),
      eng_g_(g_),
      eng_pbd_(proper_backdoor(g_, x_, y_)),
      eng_no_in_x_(mutilate(g_, x_, {})),
      eng_no_out_x_(mutilate(g_, {}, x_)) {
    NodeSet on_paths = proper_path_nodes(g_, x_, y_);
    if (!on_paths.empty())
        forbidden_direct_ = relatives(mutilate(g_, x_, {}), on_paths, Relation::Descendants);
    for (const NodeId& w : vm_)
        x_anc_of_r_.emplace(w, set_intersect(x_, relatives(g_, {g_.r_of(w)}, Relation::Ancestors)));
    if (selection_)
        x_anc_of_sel_ = set_intersect(x_, relatives(g_, {*selection_}, Relation::Ancestors));
}

Verdict CriterionContext::make_verdict(const NodeSet& z) const {
    validate_z(z);
    Verdict v;
    for (const NodeSet* part : {&x_, &y_, &z})
        for (const NodeId& n : *part)
            if (vm_.count(n)) {
                v.w.insert(n);
                v.rw.insert(g_.r_of(n));
            }
    return v;
}

void CriterionContext::validate_z(const NodeSet& z) const {
    Query q{x_, y_, z};
    validate_query(g_, q);
}

void CriterionContext::fail(Verdict& v, char label, std::string note) const {
    v.valid = false;
    v.failed.push_back(label);
    v.notes.emplace(label, std::move(note));
}

std::string CriterionContext::connection_note(SepEngine& engine, const NodeSet& a,
                                              const NodeSet& b, const NodeSet& c) const {
    auto c_ids = engine.ids_of(c);
    for (const NodeId& ai : a)
        for (const NodeId& bj : b)
            if (!engine.separated(engine.ids_of({ai}), engine.ids_of({bj}), c_ids))
                return "'" + ai + "' and '" + bj + "' stay connected given {" + join(c) + "}";
    return "connection witness not isolated to a single pair";
}

NodeSet CriterionContext::conditioning_indicators(const Verdict& v, bool with_selection) const {
    NodeSet ind = v.rw;
    if (with_selection && selection_) ind.insert(*selection_);
    return ind;
}

// Conditions (b)-(d) shared by the missingness criteria: (b) the indicators
// join z in blocking every non-causal x-y path; (c) y is separated from the
// indicators given x once edges into x are removed; (d) any x-node ancestral
// to an indicator is separated from y once edges out of x are removed.
void CriterionContext::check_bcd(Verdict& v, const NodeSet& z, bool with_selection, bool swap_b) {
    NodeSet ind = conditioning_indicators(v, with_selection);
    NodeSet cond = set_union(z, ind);

    auto cond_ids = eng_pbd_.ids_of(cond);
    auto x_ids = eng_pbd_.ids_of(x_);
    auto y_ids = eng_pbd_.ids_of(y_);
    bool blocked = swap_b ? eng_pbd_.separated(y_ids, x_ids, cond_ids)
                          : eng_pbd_.separated(x_ids, y_ids, cond_ids);
    if (!blocked)
        fail(v, 'b', "non-causal path left open: " + connection_note(eng_pbd_, x_, y_, cond));

    if (!ind.empty() && !eng_no_in_x_.separated(eng_no_in_x_.ids_of(y_), eng_no_in_x_.ids_of(ind),
                                                eng_no_in_x_.ids_of(x_)))
        fail(v, 'c',
             "with edges into x removed, " + connection_note(eng_no_in_x_, y_, ind, x_));

    NodeSet xa = with_selection ? x_anc_of_sel_ : NodeSet{};
    for (const NodeId& w : v.w) {
        const NodeSet& part = x_anc_of_r_.at(w);
        xa.insert(part.begin(), part.end());
    }
    if (!xa.empty() && !eng_no_out_x_.separated(eng_no_out_x_.ids_of(xa),
                                                eng_no_out_x_.ids_of(y_), {}))
        fail(v, 'd',
             "with edges out of x removed, " + connection_note(eng_no_out_x_, xa, y_, {}));
}

Verdict CriterionContext::backdoor(const NodeSet& z) {
    Verdict v = make_verdict(z);
    NodeSet bad = set_intersect(z, de_x_);
    if (!bad.empty()) fail(v, 'a', "z contains descendants of x: {" + join(bad) + "}");
    if (!eng_no_out_x_.separated(eng_no_out_x_.ids_of(x_), eng_no_out_x_.ids_of(y_),
                                 eng_no_out_x_.ids_of(z)))
        fail(v, 'b',
             "a backdoor path is left open: " + connection_note(eng_no_out_x_, x_, y_, z));
    return v;
}

Verdict CriterionContext::adjustment(const NodeSet& z) {
    Verdict v = make_verdict(z);
    NodeSet bad = set_intersect(z, forbidden_formula_);
    if (!bad.empty())
        fail(v, 'a', "z intersects the forbidden descendants of proper causal paths: {" +
                         join(bad) + "}");
    if (!eng_pbd_.separated(eng_pbd_.ids_of(x_), eng_pbd_.ids_of(y_), eng_pbd_.ids_of(z)))
        fail(v, 'b', "non-causal path left open: " + connection_note(eng_pbd_, x_, y_, z));
    return v;
}

Verdict CriterionContext::m_sufficient(const NodeSet& z) {
    Verdict v = make_verdict(z);
    Verdict adj = adjustment(z);
    if (!adj.valid) {
        std::string labels(adj.failed.begin(), adj.failed.end());
        fail(v, 'a', "adjustment criterion fails its condition(s) " + labels);
    }
    if (!v.rw.empty()) {
        NodeSet xz = set_union(x_, z);
        if (!eng_g_.separated(eng_g_.ids_of(y_), eng_g_.ids_of(v.rw), eng_g_.ids_of(xz)))
            fail(v, 'b', connection_note(eng_g_, y_, v.rw, xz));
        if (!z.empty() &&
            !eng_g_.separated(eng_g_.ids_of(z), eng_g_.ids_of(v.rw), {}))
            fail(v, 'c', connection_note(eng_g_, z, v.rw, {}));
    }
    return v;
}

Verdict CriterionContext::m_criterion(const NodeSet& z) {
    if (selection_)
        throw ValidationError("graph has a selection node; use the ms criterion");
    Verdict v = make_verdict(z);
    NodeSet bad = set_intersect(z, forbidden_direct_);
    if (!bad.empty())
        fail(v, 'a', "z intersects the forbidden descendants of proper causal paths: {" +
                         join(bad) + "}");
    check_bcd(v, z, /*with_selection=*/false, /*swap_b=*/false);
    return v;
}

Verdict CriterionContext::m_criterion_math(const NodeSet& z) {
    if (selection_)
        throw ValidationError("graph has a selection node; use the ms criterion");
    Verdict v = make_verdict(z);
    NodeSet bad = set_intersect(z, forbidden_formula_);
    if (!bad.empty())
        fail(v, 'a', "z intersects the forbidden descendants of proper causal paths: {" +
                         join(bad) + "}");
    check_bcd(v, z, /*with_selection=*/false, /*swap_b=*/true);
    return v;
}

Verdict CriterionContext::ms_criterion(const NodeSet& z) {
    Verdict v = make_verdict(z);
    NodeSet bad = set_intersect(z, forbidden_formula_);
    if (!bad.empty())
        fail(v, 'a', "z intersects the forbidden descendants of proper causal paths: {" +
                         join(bad) + "}");
    check_bcd(v, z, /*with_selection=*/true, /*swap_b=*/false);
    return v;
}

Verdict check_backdoor(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).backdoor(q.z);
}

Verdict check_adjustment(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).adjustment(q.z);
}

Verdict check_m_sufficient(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).m_sufficient(q.z);
}

Verdict check_m_criterion(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).m_criterion(q.z);
}

Verdict check_m_criterion_math(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).m_criterion_math(q.z);
}

Verdict check_ms_criterion(const MGraph& g, const Query& q) {
    return CriterionContext(g, q.x, q.y).ms_criterion(q.z);
}

}  // namespace madj
