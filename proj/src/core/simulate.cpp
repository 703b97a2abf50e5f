#include "core/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace madj {

namespace {

constexpr double kJointLimit = 1048576.0;  // 2^20 cells

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& message) {
    throw ParseError("line " + std::to_string(line_no) + ": " + message);
}

double parse_probability(const std::string& tok, std::size_t line_no) {
    double p = 0;
    std::size_t used = 0;
    try {
        p = std::stod(tok, &used);
    } catch (const std::exception&) {
        fail_line(line_no, "bad probability '" + tok + "'");
    }
    if (used != tok.size()) fail_line(line_no, "bad probability '" + tok + "'");
    if (!(p >= 0.0 && p <= 1.0)) {
        fail_line(line_no, "probability " + tok + " outside [0, 1]");
    }
    return p;
}

bool is_binary_kind(NodeKind k) {
    return k == NodeKind::Missingness || k == NodeKind::Selection;
}

// A node's table flattened for index arithmetic: the row for a parent
// assignment starts at (sum of value-index * stride) * domain size.
struct CompiledNode {
    NodeId name;
    NodeKind kind;
    std::vector<std::string> domain;
    std::vector<int> parents;            // indices into the compiled order
    std::vector<std::size_t> strides;
    std::vector<double> table;
};

struct Compiled {
    MGraph canonical;
    std::vector<CompiledNode> nodes;     // topological sampling order
    std::map<NodeId, int> index;
};

// Deterministic topological order: among ready nodes, smallest name first.
std::vector<NodeId> topo_order(const MGraph& g) {
    std::map<NodeId, std::size_t> indegree;
    for (const auto& [n, kind] : g.nodes()) indegree[n] = 0;
    for (const auto& [tail, head] : g.directed_edges()) indegree[head] += 1;
    std::set<NodeId> ready;
    for (const auto& [n, d] : indegree) {
        if (d == 0) ready.insert(n);
    }
    std::vector<NodeId> order;
    while (!ready.empty()) {
        NodeId n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (const NodeId& c : g.children(n)) {
            if (--indegree[c] == 0) ready.insert(c);
        }
    }
    return order;
}

Compiled compile(const Scm& scm) {
    Compiled c;
    c.canonical = canonicalize(scm.graph);

    for (const auto& [name, dom] : scm.domains) {
        if (!c.canonical.has_node(name)) {
            throw ValidationError("domain given for unknown node '" + name + "'");
        }
    }
    for (const auto& [name, cpt] : scm.cpts) {
        if (!c.canonical.has_node(name)) {
            throw ValidationError("cpt given for unknown node '" + name + "'");
        }
    }

    std::vector<NodeId> order = topo_order(c.canonical);
    for (const NodeId& n : order) c.index[n] = static_cast<int>(c.index.size());

    for (const NodeId& name : order) {
        CompiledNode node;
        node.name = name;
        node.kind = c.canonical.kind(name);

        auto dom_it = scm.domains.find(name);
        if (is_binary_kind(node.kind)) {
            node.domain = {"0", "1"};
            if (dom_it != scm.domains.end() && dom_it->second != node.domain) {
                throw ValidationError("node '" + name + "' is binary; its domain must be: 0 1");
            }
        } else {
            if (dom_it == scm.domains.end()) {
                throw ValidationError("no domain given for node '" + name + "'");
            }
            node.domain = dom_it->second;
        }

        std::vector<NodeId> parent_names;
        {
            NodeSet ps = c.canonical.parents(name);
            parent_names.assign(ps.begin(), ps.end());
        }

        auto cpt_it = scm.cpts.find(name);
        if (cpt_it == scm.cpts.end()) {
            throw ValidationError("no cpt given for node '" + name + "'");
        }
        const Cpt& cpt = cpt_it->second;
        if (cpt.parents != parent_names) {
            throw ValidationError("cpt for '" + name + "' conditions on {" +
                                  join(cpt.parents, ", ") + "} but its parents are {" +
                                  join(parent_names, ", ") + "}");
        }

        std::size_t combos = 1;
        node.strides.assign(parent_names.size(), 1);
        for (std::size_t j = parent_names.size(); j-- > 0;) {
            node.strides[j] = combos;
            const CompiledNode& parent =
                c.nodes[static_cast<std::size_t>(c.index.at(parent_names[j]))];
            combos *= parent.domain.size();
        }
        for (const NodeId& p : parent_names) node.parents.push_back(c.index.at(p));

        if (cpt.rows.size() != combos) {
            throw ValidationError("cpt for '" + name + "' has " + std::to_string(cpt.rows.size()) +
                                  " rows; its parents admit " + std::to_string(combos) +
                                  " assignments");
        }
        node.table.assign(combos * node.domain.size(), 0.0);
        for (const auto& [assignment, probs] : cpt.rows) {
            if (assignment.size() != parent_names.size()) {
                throw ValidationError("cpt row for '" + name + "' sets " +
                                      std::to_string(assignment.size()) + " parents, expected " +
                                      std::to_string(parent_names.size()));
            }
            std::size_t row = 0;
            for (std::size_t j = 0; j < parent_names.size(); ++j) {
                const CompiledNode& parent =
                    c.nodes[static_cast<std::size_t>(c.index.at(parent_names[j]))];
                auto it = std::find(parent.domain.begin(), parent.domain.end(), assignment[j]);
                if (it == parent.domain.end()) {
                    throw ValidationError("cpt row for '" + name + "': value '" + assignment[j] +
                                          "' is not in the domain of '" + parent_names[j] + "'");
                }
                row += static_cast<std::size_t>(it - parent.domain.begin()) * node.strides[j];
            }
            if (probs.size() != node.domain.size()) {
                throw ValidationError("cpt row for '" + name + "' lists " +
                                      std::to_string(probs.size()) + " probabilities; domain has " +
                                      std::to_string(node.domain.size()) + " values");
            }
            double total = 0;
            for (double p : probs) total += p;
            if (std::abs(total - 1.0) > 1e-9) {
                throw ValidationError("cpt row for '" + name + "' sums to " +
                                      std::to_string(total));
            }
            std::copy(probs.begin(), probs.end(),
                      node.table.begin() + static_cast<std::ptrdiff_t>(row * node.domain.size()));
        }

        c.nodes.push_back(std::move(node));
    }
    return c;
}

std::size_t row_base(const Compiled& c, std::size_t node_pos, const std::vector<int>& value) {
    const CompiledNode& node = c.nodes[node_pos];
    std::size_t row = 0;
    for (std::size_t j = 0; j < node.parents.size(); ++j) {
        row += static_cast<std::size_t>(value[static_cast<std::size_t>(node.parents[j])]) *
               node.strides[j];
    }
    return row * node.domain.size();
}

}  // namespace

Scm parse_scm(const std::string& text) {
    std::vector<std::string> raw_lines;
    {
        std::stringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) raw_lines.push_back(line);
    }

    // The graph parser sees the original line numbering; model directives are
    // blanked to comments so its errors still point at the right lines.
    std::string graph_text;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> directives;
    for (std::size_t i = 0; i < raw_lines.size(); ++i) {
        std::string t = trim(raw_lines[i]);
        if (t.empty() || t[0] == '#') {
            graph_text += raw_lines[i] + "\n";
            continue;
        }
        std::vector<std::string> toks = tokens_of(t);
        const std::string& kw = toks[0];
        if (kw == "node" || kw == "edge") {
            graph_text += raw_lines[i] + "\n";
        } else if (kw == "seed" || kw == "domain" || kw == "cpt") {
            graph_text += "#\n";
            directives.emplace_back(i + 1, std::move(toks));
        } else {
            fail_line(i + 1, "unknown directive '" + kw + "'");
        }
    }

    Scm scm;
    scm.graph = parse_mgraph(graph_text);

    bool seed_seen = false;
    for (const auto& [line_no, toks] : directives) {
        const std::string& kw = toks[0];
        if (kw == "seed") {
            if (toks.size() != 2) fail_line(line_no, "expected: seed <integer>");
            if (seed_seen) fail_line(line_no, "duplicate seed line");
            try {
                std::size_t used = 0;
                scm.seed = std::stoull(toks[1], &used);
                if (used != toks[1].size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                fail_line(line_no, "bad seed '" + toks[1] + "'");
            }
            seed_seen = true;
        } else if (kw == "domain") {
            if (toks.size() < 3) fail_line(line_no, "expected: domain <node> <value>...");
            const std::string& name = toks[1];
            if (scm.domains.count(name)) fail_line(line_no, "duplicate domain for '" + name + "'");
            std::vector<std::string> values(toks.begin() + 2, toks.end());
            std::set<std::string> distinct;
            for (const std::string& v : values) {
                if (v == "NA" || v.find(',') != std::string::npos) {
                    fail_line(line_no, "domain value '" + v + "' is reserved or contains a comma");
                }
                if (!distinct.insert(v).second) {
                    fail_line(line_no, "duplicate domain value '" + v + "'");
                }
            }
            scm.domains[name] = std::move(values);
        } else {  // cpt
            auto colon = std::find(toks.begin(), toks.end(), ":");
            if (toks.size() < 2 || colon == toks.end()) {
                fail_line(line_no, "expected: cpt <node> [| <parent>=<value>...] : <p>...");
            }
            const std::string& name = toks[1];
            std::map<std::string, std::string> assignment;
            auto cursor = toks.begin() + 2;
            if (cursor != colon && *cursor == "|") {
                ++cursor;
                if (cursor == colon) fail_line(line_no, "'|' must be followed by parent=value");
                for (; cursor != colon; ++cursor) {
                    std::size_t eq = cursor->find('=');
                    if (eq == std::string::npos || eq == 0 || eq + 1 == cursor->size()) {
                        fail_line(line_no, "bad parent assignment '" + *cursor + "'");
                    }
                    std::string parent = cursor->substr(0, eq);
                    std::string value = cursor->substr(eq + 1);
                    if (!assignment.emplace(parent, value).second) {
                        fail_line(line_no, "parent '" + parent + "' assigned twice");
                    }
                }
            } else if (cursor != colon) {
                fail_line(line_no, "unexpected token '" + *cursor + "' before ':'");
            }
            std::vector<double> probs;
            for (auto it = colon + 1; it != toks.end(); ++it) {
                probs.push_back(parse_probability(*it, line_no));
            }
            if (probs.empty()) fail_line(line_no, "cpt row lists no probabilities");

            std::vector<NodeId> parents;
            std::vector<std::string> key;
            for (const auto& [p, v] : assignment) {
                parents.push_back(p);
                key.push_back(v);
            }
            auto [it, inserted] = scm.cpts.try_emplace(name);
            Cpt& cpt = it->second;
            if (inserted) {
                cpt.parents = parents;
            } else if (cpt.parents != parents) {
                fail_line(line_no, "cpt rows for '" + name + "' condition on different parents");
            }
            if (!cpt.rows.emplace(std::move(key), std::move(probs)).second) {
                fail_line(line_no, "duplicate cpt row for '" + name + "'");
            }
        }
    }

    compile(scm);  // full validation; throws on any inconsistency
    return scm;
}

std::string sample_csv(const Scm& scm, std::size_t n) {
    Compiled c = compile(scm);

    // Column layout: variables by name, indicators right after their targets,
    // selection last. Latents stay internal.
    std::vector<int> col_nodes;
    std::vector<std::string> col_names;
    for (const NodeId& v : scm.graph.v_nodes()) {
        col_nodes.push_back(c.index.at(v));
        col_names.push_back(v);
        if (scm.graph.kind(v) == NodeKind::PartiallyObserved) {
            NodeId r = scm.graph.r_of(v);
            col_nodes.push_back(c.index.at(r));
            col_names.push_back(r);
        }
    }
    int sel_node = -1;
    if (auto s = scm.graph.selection_node()) {
        sel_node = c.index.at(*s);
        col_names.push_back(*s);
    }

    std::string out = join(col_names, ",") + "\n";
    out.reserve(out.size() + n * col_names.size() * 3);

    std::mt19937_64 rng(scm.seed);
    auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<int> value(c.nodes.size(), 0);
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t pos = 0; pos < c.nodes.size(); ++pos) {
            const CompiledNode& node = c.nodes[pos];
            std::size_t base = row_base(c, pos, value);
            double u = uniform();
            double acc = 0;
            int drawn = static_cast<int>(node.domain.size()) - 1;
            for (std::size_t k = 0; k < node.domain.size(); ++k) {
                acc += node.table[base + k];
                if (u < acc) {
                    drawn = static_cast<int>(k);
                    break;
                }
            }
            value[pos] = drawn;
        }

        bool selected = true;
        if (sel_node >= 0) {
            selected = c.nodes[static_cast<std::size_t>(sel_node)]
                           .domain[static_cast<std::size_t>(value[static_cast<std::size_t>(sel_node)])] == "1";
        }
        std::string line;
        for (std::size_t i = 0; i < col_nodes.size(); ++i) {
            const CompiledNode& node = c.nodes[static_cast<std::size_t>(col_nodes[i])];
            if (i) line += ",";
            if (!selected) {
                line += "NA";
                continue;
            }
            if (node.kind == NodeKind::PartiallyObserved) {
                int r_pos = c.index.at(scm.graph.r_of(node.name));
                if (c.nodes[static_cast<std::size_t>(r_pos)]
                        .domain[static_cast<std::size_t>(value[static_cast<std::size_t>(r_pos)])] == "0") {
                    line += "NA";
                    continue;
                }
            }
            line += node.domain[static_cast<std::size_t>(value[static_cast<std::size_t>(col_nodes[i])])];
        }
        if (sel_node >= 0) {
            if (!col_nodes.empty()) line += ",";
            line += selected ? "1" : "0";
        }
        out += line;
        out += "\n";
    }
    return out;
}

Dataset sample(const Scm& scm, std::size_t n) {
    std::optional<std::string> sel;
    if (auto s = scm.graph.selection_node()) sel = *s;
    return load_csv(sample_csv(scm, n), sel);
}

DistTable true_effect(const Scm& scm, const Assignment& x,
                      const std::vector<std::string>& y_vars) {
    if (x.empty()) throw ValidationError("x assignment must be non-empty");
    if (y_vars.empty()) throw ValidationError("y must be non-empty");

    Compiled c = compile(scm);
    NodeSet v = scm.graph.v_nodes();
    for (const auto& [name, val] : x) {
        if (!v.count(name)) throw ValidationError("'" + name + "' is not a variable");
    }
    std::set<std::string> y_seen;
    for (const std::string& yv : y_vars) {
        if (!v.count(yv)) throw ValidationError("'" + yv + "' is not a variable");
        if (x.count(yv)) throw ValidationError("'" + yv + "' appears in both x and y");
        if (!y_seen.insert(yv).second) throw ValidationError("duplicate y variable '" + yv + "'");
    }

    // Sum over variables and latents only: indicator and selection mechanisms
    // do not enter the interventional distribution.
    std::vector<std::size_t> sum_nodes;
    double joint = 1;
    for (std::size_t pos = 0; pos < c.nodes.size(); ++pos) {
        if (is_binary_kind(c.nodes[pos].kind)) continue;
        sum_nodes.push_back(pos);
        joint *= static_cast<double>(c.nodes[pos].domain.size());
        if (joint > kJointLimit) {
            throw TooLargeError("joint domain exceeds 2^20 cells; exact summation refused");
        }
    }

    std::vector<int> value(c.nodes.size(), 0);
    std::vector<char> clamped(c.nodes.size(), 0);
    for (const auto& [name, val] : x) {
        std::size_t pos = static_cast<std::size_t>(c.index.at(name));
        const auto& dom = c.nodes[pos].domain;
        auto it = std::find(dom.begin(), dom.end(), val);
        if (it == dom.end()) {
            throw ValidationError("value '" + val + "' is not in the domain of '" + name + "'");
        }
        value[pos] = static_cast<int>(it - dom.begin());
        clamped[pos] = 1;
    }

    std::vector<std::size_t> free_nodes;
    for (std::size_t pos : sum_nodes) {
        if (!clamped[pos]) free_nodes.push_back(pos);
    }

    std::vector<std::size_t> y_pos;
    for (const std::string& yv : y_vars) y_pos.push_back(static_cast<std::size_t>(c.index.at(yv)));

    DistTable dist;
    dist.scope = y_vars;
    {
        // every joint y-cell appears, zeros included
        std::vector<std::vector<std::string>> cells{{}};
        for (std::size_t pos : y_pos) {
            std::vector<std::vector<std::string>> next;
            for (const auto& prefix : cells) {
                for (const std::string& val : c.nodes[pos].domain) {
                    auto cell = prefix;
                    cell.push_back(val);
                    next.push_back(std::move(cell));
                }
            }
            cells = std::move(next);
        }
        for (auto& cell : cells) dist.entries[std::move(cell)] = 0.0;
    }

    double total = 0;
    bool done = false;
    while (!done) {
        double weight = 1;
        for (std::size_t pos : sum_nodes) {
            if (clamped[pos]) continue;
            std::size_t base = row_base(c, pos, value);
            weight *= c.nodes[pos].table[base + static_cast<std::size_t>(value[pos])];
        }
        if (weight > 0) {
            std::vector<std::string> key;
            key.reserve(y_pos.size());
            for (std::size_t pos : y_pos) {
                key.push_back(c.nodes[pos].domain[static_cast<std::size_t>(value[pos])]);
            }
            dist.entries[key] += weight;
            total += weight;
        }
        done = true;
        for (std::size_t i = free_nodes.size(); i-- > 0;) {
            std::size_t pos = free_nodes[i];
            if (value[pos] + 1 < static_cast<int>(c.nodes[pos].domain.size())) {
                value[pos] += 1;
                done = false;
                break;
            }
            value[pos] = 0;
        }
    }

    if (std::abs(total - 1.0) > 1e-9) {
        throw InternalError("interventional weights sum to " + std::to_string(total));
    }
    for (auto& [key, p] : dist.entries) p /= total;
    return dist;
}

}  // namespace madj
