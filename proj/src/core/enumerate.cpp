#include "core/enumerate.hpp"

#include <algorithm>
#include <deque>
#include <iterator>
#include <limits>

#include "core/dsep.hpp"

namespace madj {

namespace {

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
    NodeSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

void validate_pair(const MGraph& g, const NodeSet& x, const NodeSet& y, const char* op) {
    if (x.empty() || y.empty())
        throw ValidationError(std::string(op) + ": x and y must be nonempty");
    for (const NodeSet* s : {&x, &y})
        for (const NodeId& n : *s) {
            if (!g.has_node(n)) throw ValidationError(std::string(op) + ": unknown node '" + n + "'");
            if (g.kind(n) == NodeKind::Latent)
                throw ValidationError(std::string(op) + ": latent node '" + n + "' not allowed");
        }
    for (const NodeId& n : x)
        if (y.count(n)) throw ValidationError(std::string(op) + ": '" + n + "' is in both x and y");
}

void validate_bounds(const MGraph& g, const NodeSet& x, const NodeSet& y, const SubsetBounds& bounds,
                   const char* op) {
    for (const NodeId& n : bounds.e) {
        if (!g.has_node(n)) throw ValidationError(std::string(op) + ": unknown node '" + n + "'");
        if (g.kind(n) == NodeKind::Latent)
            throw ValidationError(std::string(op) + ": latent node '" + n + "' not allowed in e");
        if (x.count(n) || y.count(n))
            throw ValidationError(std::string(op) + ": e overlaps x ∪ y on '" + n + "'");
    }
    for (const NodeId& n : bounds.i)
        if (!bounds.e.count(n))
            throw ValidationError(std::string(op) + ": i-node '" + n + "' is missing from e");
}

// Shared groundwork for the two criterion-driven searches: candidate
// variables with the per-element indicator conditions applied, plus the fixed
// indicator check. The conditions over any indicator set decompose into
// single-indicator conditions (d-separation is compositional), so filtering
// elements up front is equivalent to checking (c)/(d) for every candidate set.
struct CriterionGround {
    MGraph gpbd;
    NodeSet candidates;      // variables allowed into z
    NodeSet fixed;           // indicators of (x ∪ y) ∩ V_m, plus selection in ms mode
    bool feasible = true;    // fixed indicators passed conditions (c)/(d)
};

CriterionGround prepare_ground(const MGraph& g, const NodeSet& x, const NodeSet& y,
                               CriterionMode mode) {
    validate_query(g, Query{x, y, {}});
    auto selection = g.selection_node();
    if (mode == CriterionMode::M && selection)
        throw ValidationError("graph has a selection node; use the ms criterion");

    CriterionGround ground;
    ground.gpbd = proper_backdoor(g, x, y);
    NodeSet forbidden = dpcp(g, x, y);
    NodeSet xy = set_union(x, y);
    for (const NodeId& n : g.v_nodes())
        if (!xy.count(n) && !forbidden.count(n)) ground.candidates.insert(n);

    NodeSet vm = g.nodes_of_kind(NodeKind::PartiallyObserved);
    for (const NodeId& n : xy)
        if (vm.count(n)) ground.fixed.insert(g.r_of(n));
    if (mode == CriterionMode::MS && selection) ground.fixed.insert(*selection);

    SepEngine no_in_x(mutilate(g, x, {}));
    SepEngine no_out_x(mutilate(g, {}, x));
    auto passes = [&](const NodeSet& indicators) {
        if (indicators.empty()) return true;
        if (!no_in_x.separated(no_in_x.ids_of(y), no_in_x.ids_of(indicators), no_in_x.ids_of(x)))
            return false;
        NodeSet xa;
        for (const NodeId& r : indicators) {
            NodeSet anc = relatives(g, {r}, Relation::Ancestors);
            for (const NodeId& xi : x)
                if (anc.count(xi)) xa.insert(xi);
        }
        if (xa.empty()) return true;
        return no_out_x.separated(no_out_x.ids_of(xa), no_out_x.ids_of(y), {});
    };

    ground.feasible = passes(ground.fixed);
    if (ground.feasible) {
        NodeSet kept;
        for (const NodeId& n : ground.candidates) {
            if (!vm.count(n) || passes({g.r_of(n)})) kept.insert(n);
        }
        ground.candidates = std::move(kept);
    }
    return ground;
}

}  // namespace

std::optional<NodeSet> find_sep(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                const SubsetBounds& bounds) {
    validate_pair(g, x, y, "find_sep");
    validate_bounds(g, x, y, bounds, "find_sep");
    NodeSet seeds = set_union(set_union(x, y), bounds.i);
    NodeSet candidate;
    NodeSet anc = relatives(g, seeds, Relation::Ancestors);
    for (const NodeId& n : anc)
        if (bounds.e.count(n)) candidate.insert(n);
    if (d_separated(g, SepQuery{x, y, candidate})) return candidate;
    return std::nullopt;
}

namespace {

// Depth-first walk over include/exclude decisions for the candidate
// variables, pruned by separator existence within the current bounds. Every
// surviving node has an output leaf beneath it, which gives the polynomial
// delay; leaves pass exactly when the chosen set plus its indicators blocks
// the proper backdoor graph.
class ListWalk {
  public:
    ListWalk(const CriterionGround& ground, const MGraph& g, const NodeSet& x, const NodeSet& y,
             const SetSink& sink)
        : engine_(ground.gpbd), sink_(sink) {
        int n = engine_.node_count();
        in_e_.assign(n, 0);
        is_xy_.assign(n, 0);
        x_ids_ = engine_.ids_of(x);
        y_ids_ = engine_.ids_of(y);
        for (int v : x_ids_) is_xy_[v] = 1;
        for (int v : y_ids_) is_xy_[v] = 1;
        for (const NodeId& r : ground.fixed) {
            int id = engine_.id_of(r);
            in_e_[id] = 1;
            forced_.push_back(id);
        }
        NodeSet vm = g.nodes_of_kind(NodeKind::PartiallyObserved);
        for (const NodeId& n_id : ground.candidates) {
            int v = engine_.id_of(n_id);
            in_e_[v] = 1;
            branch_ids_.push_back(v);
            branch_names_.push_back(n_id);
            int r = vm.count(n_id) ? engine_.id_of(g.r_of(n_id)) : -1;
            if (r >= 0) in_e_[r] = 1;
            indicator_of_.push_back(r);
        }
        chosen_with_indicators_ = forced_;
        overflow_cap_ = branch_ids_.size() * 4 + 8;
    }

    std::size_t run() {
        walk(0);
        while (!stopped_ && !pending_.empty()) deliver_one();
        return count_;
    }

  private:
    bool bounds_admit_separator() {
        seeds_.clear();
        seeds_.insert(seeds_.end(), x_ids_.begin(), x_ids_.end());
        seeds_.insert(seeds_.end(), y_ids_.begin(), y_ids_.end());
        seeds_.insert(seeds_.end(), chosen_with_indicators_.begin(),
                      chosen_with_indicators_.end());
        engine_.ancestors_into(seeds_, ancestors_);
        candidate_.clear();
        for (int v : ancestors_)
            if (in_e_[v] && !is_xy_[v]) candidate_.push_back(v);
        return engine_.separated(x_ids_, y_ids_, candidate_);
    }

    void deliver_one() {
        // Count before invoking the sink so a set that triggers an early stop
        // is still included in the returned total.
        count_++;
        if (!sink_(pending_.front())) stopped_ = true;
        pending_.pop_front();
    }

    // Called once per explored node. Outputs are buffered at the leaves and
    // handed to the sink at a steady rate of one per few explored nodes, so
    // the spacing between consecutive outputs tracks the per-node work even
    // when the walk crosses output-free stretches (deep backtracks). The
    // overflow cap bounds the buffer; the stream keeps discovery order.
    void pace() {
        if (stopped_) return;
        if (++ticks_ % kDeliveryPeriod == 0 && !pending_.empty()) deliver_one();
        while (!stopped_ && pending_.size() > overflow_cap_) deliver_one();
    }

    void walk(std::size_t pos) {
        if (stopped_) return;
        bool admits = bounds_admit_separator();
        pace();
        if (stopped_ || !admits) return;
        if (pos == branch_ids_.size()) {
            pending_.emplace_back(chosen_names_.begin(), chosen_names_.end());
            return;
        }
        int v = branch_ids_[pos];
        int r = indicator_of_[pos];

        chosen_with_indicators_.push_back(v);
        if (r >= 0) chosen_with_indicators_.push_back(r);
        chosen_names_.push_back(branch_names_[pos]);
        walk(pos + 1);
        chosen_names_.pop_back();
        chosen_with_indicators_.pop_back();
        if (r >= 0) chosen_with_indicators_.pop_back();
        if (stopped_) return;

        in_e_[v] = 0;
        if (r >= 0) in_e_[r] = 0;
        walk(pos + 1);
        in_e_[v] = 1;
        if (r >= 0) in_e_[r] = 1;
    }

    SepEngine engine_;
    const SetSink& sink_;
    std::vector<int> x_ids_, y_ids_;
    std::vector<std::uint8_t> in_e_, is_xy_;
    std::vector<int> branch_ids_;
    std::vector<NodeId> branch_names_;
    std::vector<int> indicator_of_;
    std::vector<int> forced_;
    std::vector<int> chosen_with_indicators_;
    std::vector<NodeId> chosen_names_;
    std::vector<int> seeds_, ancestors_, candidate_;
    std::deque<NodeSet> pending_;
    static constexpr std::size_t kDeliveryPeriod = 3;
    std::size_t overflow_cap_ = 0;
    std::size_t ticks_ = 0;
    std::size_t count_ = 0;
    bool stopped_ = false;
};

}  // namespace

std::size_t list_madj(const MGraph& g, const NodeSet& x, const NodeSet& y, CriterionMode mode,
                      const SetSink& sink) {
    CriterionGround ground = prepare_ground(g, x, y, mode);
    if (!ground.feasible) return 0;
    ListWalk walk(ground, g, x, y, sink);
    return walk.run();
}

namespace {

// Dinic max-flow; capacities are doubles but stay exact for integer inputs.
class MaxFlow {
  public:
    explicit MaxFlow(int n) : adj_(n) {}

    void add_arc(int u, int v, double cap) {
        adj_[u].push_back({v, cap, static_cast<int>(adj_[v].size())});
        adj_[v].push_back({u, 0.0, static_cast<int>(adj_[u].size()) - 1});
    }

    double run(int s, int t, double limit) {
        double total = 0.0;
        while (total < limit && build_levels(s, t)) {
            iter_.assign(adj_.size(), 0);
            while (double pushed = augment(s, t, limit - total)) total += pushed;
        }
        return total;
    }

    // After run(): nodes reachable from s in the residual graph.
    std::vector<char> source_side(int s) const {
        std::vector<char> seen(adj_.size(), 0);
        std::vector<int> queue{s};
        seen[s] = 1;
        for (std::size_t i = 0; i < queue.size(); ++i)
            for (const Arc& a : adj_[queue[i]])
                if (a.cap > 0 && !seen[a.to]) {
                    seen[a.to] = 1;
                    queue.push_back(a.to);
                }
        return seen;
    }

  private:
    struct Arc {
        int to;
        double cap;
        int rev;
    };

    bool build_levels(int s, int t) {
        level_.assign(adj_.size(), -1);
        std::vector<int> queue{s};
        level_[s] = 0;
        for (std::size_t i = 0; i < queue.size(); ++i)
            for (const Arc& a : adj_[queue[i]])
                if (a.cap > 0 && level_[a.to] < 0) {
                    level_[a.to] = level_[queue[i]] + 1;
                    queue.push_back(a.to);
                }
        return level_[t] >= 0;
    }

    double augment(int v, int t, double limit) {
        if (v == t || limit <= 0) return v == t ? limit : 0.0;
        for (int& i = iter_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
            Arc& a = adj_[v][i];
            if (a.cap <= 0 || level_[a.to] != level_[v] + 1) continue;
            double pushed = augment(a.to, t, std::min(limit, a.cap));
            if (pushed > 0) {
                a.cap -= pushed;
                adj_[a.to][a.rev].cap += pushed;
                return pushed;
            }
        }
        return 0.0;
    }

    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<int> iter_;
};

}  // namespace

std::optional<NodeSet> find_min_cost_sep(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                         const SubsetBounds& bounds,
                                         const std::map<NodeId, double>& weights) {
    validate_pair(g, x, y, "find_min_cost_sep");
    validate_bounds(g, x, y, bounds, "find_min_cost_sep");
    double finite_total = 0.0;
    for (const NodeId& n : bounds.e) {
        auto it = weights.find(n);
        if (it == weights.end())
            throw ValidationError("find_min_cost_sep: no weight for '" + n + "'");
        if (it->second < 0)
            throw ValidationError("find_min_cost_sep: negative weight for '" + n + "'");
        finite_total += it->second;
    }
    const double kInf = finite_total + 1.0;

    MGraph canon = canonicalize(g);
    NodeSet seeds = set_union(set_union(x, y), bounds.i);
    NodeSet closure = relatives(canon, seeds, Relation::Ancestors);
    std::vector<NodeId> order(closure.begin(), closure.end());
    std::map<NodeId, int> index;
    for (std::size_t k = 0; k < order.size(); ++k) index.emplace(order[k], static_cast<int>(k));

    // Moral graph over the ancestral closure: skeleton plus co-parent links.
    std::set<std::pair<int, int>> moral;
    auto link = [&](int u, int v) {
        if (u != v) moral.emplace(std::min(u, v), std::max(u, v));
    };
    std::map<int, std::vector<int>> parents_in;
    for (const auto& [tail, head] : canon.directed_edges()) {
        auto t = index.find(tail);
        auto h = index.find(head);
        if (t == index.end() || h == index.end()) continue;
        link(t->second, h->second);
        parents_in[h->second].push_back(t->second);
    }
    for (const auto& [node, ps] : parents_in)
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j) link(ps[i], ps[j]);

    // Vertex split: node k becomes arc 2k -> 2k+1 carrying its weight.
    int n = static_cast<int>(order.size());
    int source = 2 * n, target = 2 * n + 1;
    MaxFlow flow(2 * n + 2);
    for (int k = 0; k < n; ++k) {
        const NodeId& node = order[k];
        double cap;
        if (x.count(node) || y.count(node))
            cap = kInf;
        else if (bounds.i.count(node))
            cap = 0.0;
        else if (bounds.e.count(node))
            cap = weights.at(node);
        else
            cap = kInf;
        flow.add_arc(2 * k, 2 * k + 1, cap);
    }
    for (const auto& [u, v] : moral) {
        flow.add_arc(2 * u + 1, 2 * v, kInf);
        flow.add_arc(2 * v + 1, 2 * u, kInf);
    }
    for (const NodeId& xi : x)
        if (index.count(xi)) flow.add_arc(source, 2 * index.at(xi) + 1, kInf);
    for (const NodeId& yj : y)
        if (index.count(yj)) flow.add_arc(2 * index.at(yj), target, kInf);

    if (flow.run(source, target, kInf) >= kInf) return std::nullopt;

    std::vector<char> reach = flow.source_side(source);
    NodeSet cut = bounds.i;
    for (int k = 0; k < n; ++k)
        if (reach[2 * k] && !reach[2 * k + 1]) cut.insert(order[k]);

    for (const NodeId& n_id : cut)
        if (!bounds.e.count(n_id))
            throw InternalError("find_min_cost_sep: cut escaped the allowed set at '" + n_id + "'");
    if (!d_separated(g, SepQuery{x, y, cut}))
        throw InternalError("find_min_cost_sep: computed cut fails to separate");
    return cut;
}

std::optional<NodeSet> find_min_adj_set(const MGraph& g, const NodeSet& x, const NodeSet& y,
                                        CriterionMode mode) {
    CriterionGround ground = prepare_ground(g, x, y, mode);
    if (!ground.feasible) return std::nullopt;

    std::map<NodeId, double> weights;
    for (const NodeId& n : ground.candidates) weights.emplace(n, 1.0);
    auto cut = find_min_cost_sep(ground.gpbd, x, y, SubsetBounds{{}, ground.candidates}, weights);
    if (!cut) return std::nullopt;

    CriterionContext ctx(g, x, y);
    Verdict verdict = mode == CriterionMode::MS ? ctx.ms_criterion(*cut) : ctx.m_criterion(*cut);
    if (!verdict.valid) {
        std::string labels(verdict.failed.begin(), verdict.failed.end());
        throw InternalError("find_min_adj_set: candidate violates criterion condition(s) " +
                            labels);
    }
    return cut;
}

}  // namespace madj
