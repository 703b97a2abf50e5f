#include "core/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace madj {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

bool is_na(const std::string& cell) { return cell.empty() || cell == "NA"; }

// Indicator columns must mirror the NA pattern of their target column on
// selected rows; unselected rows must be entirely NA.
void validate_dataset(const Dataset& d, const std::string& selection_name) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < d.columns.size(); ++i) index[d.columns[i]] = i;

    std::vector<std::pair<std::size_t, std::size_t>> indicator_pairs;  // (R column, target)
    for (std::size_t i = 0; i < d.columns.size(); ++i) {
        const std::string& name = d.columns[i];
        if (name.rfind("R_", 0) != 0) continue;
        auto it = index.find(name.substr(2));
        if (it != index.end()) indicator_pairs.emplace_back(i, it->second);
    }

    for (std::size_t r = 0; r < d.rows.size(); ++r) {
        const auto& row = d.rows[r];
        if (!d.selected[r]) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (row[c]) {
                    throw ParseError("row " + std::to_string(r + 2) + ": column '" +
                                     d.columns[c] + "' has a value but " + selection_name +
                                     " is 0; unselected rows must be all NA");
                }
            }
            continue;
        }
        for (const auto& [rc, tc] : indicator_pairs) {
            if (!row[rc]) {
                throw ParseError("row " + std::to_string(r + 2) + ": indicator column '" +
                                 d.columns[rc] + "' is NA on a selected row");
            }
            const std::string& rv = *row[rc];
            if (rv != "0" && rv != "1") {
                throw ParseError("row " + std::to_string(r + 2) + ": indicator column '" +
                                 d.columns[rc] + "' must be 0 or 1, got '" + rv + "'");
            }
            bool observed = row[tc].has_value();
            if (observed != (rv == "1")) {
                throw ParseError("row " + std::to_string(r + 2) + ": indicator column '" +
                                 d.columns[rc] + "' is " + rv + " but '" + d.columns[tc] +
                                 "' is " + (observed ? "present" : "NA"));
            }
        }
    }
}

}  // namespace

std::size_t Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw ValidationError("dataset has no column named '" + name + "'");
}

std::size_t Dataset::selected_count() const {
    std::size_t n = 0;
    for (char s : selected) n += (s != 0);
    return n;
}

Dataset load_csv(const std::string& text) {
    return load_csv(text, std::optional<std::string>{"S"});
}

Dataset load_csv(const std::string& text, const std::optional<std::string>& selection_column) {
    std::vector<std::string> lines;
    {
        std::stringstream ss(text);
        std::string line;
        while (std::getline(ss, line)) {
            line = trim(line);
            if (!line.empty()) lines.push_back(line);
        }
    }
    if (lines.empty()) throw ParseError("empty csv: no header line");

    std::vector<std::string> header = split_csv_line(lines[0]);
    if (header.empty()) throw ParseError("empty csv header");
    std::set<std::string> seen;
    for (const std::string& name : header) {
        if (name.empty()) throw ParseError("csv header has an empty column name");
        if (!seen.insert(name).second) throw ParseError("duplicate csv column '" + name + "'");
    }

    std::ptrdiff_t sel_col = -1;
    if (selection_column) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == *selection_column) sel_col = static_cast<std::ptrdiff_t>(i);
        }
    }

    Dataset d;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (static_cast<std::ptrdiff_t>(i) == sel_col) continue;
        d.columns.push_back(header[i]);
    }
    if (sel_col >= 0) d.selection_column = header[static_cast<std::size_t>(sel_col)];
    if (d.columns.empty()) throw ParseError("csv has no data columns");

    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::vector<std::string> cells = split_csv_line(lines[li]);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(li + 1) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        char selected = 1;
        if (sel_col >= 0) {
            const std::string& sv = cells[static_cast<std::size_t>(sel_col)];
            if (sv != "0" && sv != "1") {
                throw ParseError("row " + std::to_string(li + 1) + ": selection column '" +
                                 *d.selection_column + "' must be 0 or 1, got '" + sv + "'");
            }
            selected = (sv == "1") ? 1 : 0;
        }
        std::vector<std::optional<std::string>> row;
        row.reserve(d.columns.size());
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (static_cast<std::ptrdiff_t>(i) == sel_col) continue;
            if (is_na(cells[i])) {
                row.push_back(std::nullopt);
            } else {
                row.push_back(cells[i]);
            }
        }
        d.rows.push_back(std::move(row));
        d.selected.push_back(selected);
    }
    if (d.rows.empty()) throw ParseError("csv has a header but no data rows");

    for (std::size_t c = 0; c < d.columns.size(); ++c) {
        std::set<std::string> values;
        for (const auto& row : d.rows) {
            if (row[c]) values.insert(*row[c]);
        }
        d.domains[d.columns[c]] = std::vector<std::string>(values.begin(), values.end());
    }

    validate_dataset(d, d.selection_column.value_or("S"));
    return d;
}

namespace {

// Row indices where every column in w is observed (and the row is selected,
// when required). Errors if no row qualifies.
std::vector<std::size_t> qualifying_rows(const Dataset& d, const std::vector<std::string>& w,
                                         bool require_selection) {
    if (require_selection && !d.selection_column) {
        throw ValidationError("conditioning on selection requires a selection column");
    }
    std::vector<std::size_t> wcols;
    for (const std::string& name : w) wcols.push_back(d.column_index(name));

    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
        if (!d.selected[r]) continue;  // unselected rows are all-NA; never usable
        bool ok = true;
        for (std::size_t c : wcols) {
            if (!d.rows[r][c]) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(r);
    }
    if (out.empty()) {
        std::string which = w.empty() ? "" : " with {" + join(w, ", ") + "} observed";
        throw ValidationError("no usable rows" + which);
    }
    return out;
}

std::vector<std::string> row_values(const Dataset& d, std::size_t r,
                                    const std::vector<std::size_t>& cols,
                                    const char* purpose) {
    std::vector<std::string> out;
    out.reserve(cols.size());
    for (std::size_t c : cols) {
        const auto& cell = d.rows[r][c];
        if (!cell) {
            throw ValidationError("row " + std::to_string(r + 2) + ": column '" + d.columns[c] +
                                  "' is NA but is needed as a " + purpose +
                                  " column in every usable row");
        }
        out.push_back(*cell);
    }
    return out;
}

double domain_product(const Dataset& d, const std::vector<std::string>& names) {
    double p = 1.0;
    for (const std::string& name : names) {
        auto it = d.domains.find(name);
        std::size_t size = (it == d.domains.end()) ? 0 : it->second.size();
        p *= static_cast<double>(size);
    }
    return p;
}

// All joint values of the given columns, in lexicographic cell order.
std::vector<std::vector<std::string>> domain_cells(const Dataset& d,
                                                   const std::vector<std::string>& names) {
    std::vector<std::vector<std::string>> cells{{}};
    for (const std::string& name : names) {
        const auto& dom = d.domains.at(name);
        std::vector<std::vector<std::string>> next;
        next.reserve(cells.size() * dom.size());
        for (const auto& prefix : cells) {
            for (const std::string& v : dom) {
                auto cell = prefix;
                cell.push_back(v);
                next.push_back(std::move(cell));
            }
        }
        cells = std::move(next);
    }
    return cells;
}

struct StratumCounts {
    double n = 0;  // qualifying rows
    std::map<std::vector<std::string>, double> z;                            // z-cell
    std::map<std::vector<std::string>, double> xz;                           // z-cell, x matches
    std::map<std::vector<std::string>, std::map<std::vector<std::string>, double>> yxz;
};

// The common estimator body. The two formulas below are algebraically equal;
// both are kept, written independently, so each can cross-check the other.
enum class Formula { Ratio, Weighting };

EffectEstimate estimate_impl(const Dataset& d, const MGraph& g, const Assignment& x,
                             const std::vector<std::string>& y_vars, const NodeSet& z,
                             const EstimateOptions& options, Method method, Formula formula) {
    if (x.empty()) throw ValidationError("x assignment must be non-empty");
    if (y_vars.empty()) throw ValidationError("y must be non-empty");
    {
        std::set<std::string> seen;
        for (const std::string& yv : y_vars) {
            if (!seen.insert(yv).second) throw ValidationError("duplicate y variable '" + yv + "'");
        }
    }

    Query q;
    for (const auto& [name, value] : x) q.x.insert(name);
    q.y = NodeSet(y_vars.begin(), y_vars.end());
    q.z = z;

    bool ms = (method == Method::MsAdjustment);
    CriterionContext ctx(g, q.x, q.y);
    Verdict verdict = ms ? ctx.ms_criterion(q.z) : ctx.m_criterion(q.z);
    bool forced = false;
    if (!verdict.valid) {
        if (!options.force) {
            std::string labels(verdict.failed.begin(), verdict.failed.end());
            throw ValidationError("adjustment set is not valid for this effect (failed condition" +
                                  std::string(verdict.failed.size() > 1 ? "s " : " ") + labels +
                                  "); pass force to estimate anyway");
        }
        forced = true;
    }

    if (options.smooth < 0) throw ValidationError("smoothing must be non-negative");
    double alpha = options.smooth;

    // W: partially observed variables among x, y, z.
    std::vector<std::string> w;
    for (const NodeId& n : g.nodes_of_kind(NodeKind::PartiallyObserved)) {
        if (q.x.count(n) || q.y.count(n) || q.z.count(n)) w.push_back(n);
    }
    // Every factor conditions on full observability of W; rows outside the
    // selection are all-NA and never usable, so a dataset without a selection
    // column is read as entirely selected.
    std::vector<std::size_t> rows = qualifying_rows(d, w, false);

    std::vector<std::string> x_names;
    std::vector<std::string> x_values;
    for (const auto& [name, value] : x) {
        x_names.push_back(name);
        x_values.push_back(value);
    }
    std::vector<std::string> z_names(z.begin(), z.end());

    std::vector<std::size_t> x_cols, y_cols, z_cols;
    for (const std::string& n : x_names) x_cols.push_back(d.column_index(n));
    for (const std::string& n : y_vars) y_cols.push_back(d.column_index(n));
    for (const std::string& n : z_names) z_cols.push_back(d.column_index(n));

    StratumCounts counts;
    for (std::size_t r : rows) {
        std::vector<std::string> zv = row_values(d, r, z_cols, "covariate");
        std::vector<std::string> xv = row_values(d, r, x_cols, "treatment");
        std::vector<std::string> yv = row_values(d, r, y_cols, "outcome");
        counts.n += 1;
        counts.z[zv] += 1;
        if (xv == x_values) {
            counts.xz[zv] += 1;
            counts.yxz[zv][yv] += 1;
        }
    }

    for (const std::string& xn : x_names) {
        const auto& dom = d.domains.at(xn);
        if (std::find(dom.begin(), dom.end(), x.at(xn)) == dom.end()) {
            throw PositivityError("treatment value '" + x.at(xn) + "' for '" + xn +
                                  "' never appears in the usable rows");
        }
    }

    double dx = domain_product(d, x_names);
    double dy = domain_product(d, y_vars);
    double dz = domain_product(d, z_names);
    double n_all = counts.n + alpha * dx * dy * dz;

    std::vector<std::vector<std::string>> z_cells;
    if (alpha > 0) {
        z_cells = domain_cells(d, z_names);
    } else {
        for (const auto& [zv, c] : counts.z) z_cells.push_back(zv);
    }
    std::vector<std::vector<std::string>> y_cells = domain_cells(d, y_vars);

    DistTable dist;
    dist.scope = y_vars;
    for (const auto& yv : y_cells) dist.entries[yv] = 0.0;

    for (const auto& zv : z_cells) {
        double cz = alpha * dx * dy;
        double cxz = alpha * dy;
        if (auto it = counts.z.find(zv); it != counts.z.end()) cz += it->second;
        if (auto it = counts.xz.find(zv); it != counts.xz.end()) cxz += it->second;
        if (cxz <= 0) {
            std::string stratum = z_names.empty()
                                      ? "the data"
                                      : "stratum {" + join(z_names, ", ") + "} = (" +
                                            join(zv, ", ") + ")";
            throw PositivityError("no usable rows match the treatment assignment within " +
                                  stratum + "; use smoothing or collect more data");
        }
        const std::map<std::vector<std::string>, double>* ycounts = nullptr;
        if (auto it = counts.yxz.find(zv); it != counts.yxz.end()) ycounts = &it->second;
        for (const auto& yv : y_cells) {
            double cyxz = alpha;
            if (ycounts) {
                if (auto it = ycounts->find(yv); it != ycounts->end()) cyxz += it->second;
            }
            if (cyxz == 0) continue;
            double term;
            if (formula == Formula::Weighting) {
                // inverse-probability weighting: joint over propensity
                double joint = cyxz / n_all;
                double propensity = cxz / cz;
                term = joint / propensity;
            } else {
                // stratified adjustment: conditional outcome times stratum weight
                double outcome = cyxz / cxz;
                double weight = cz / n_all;
                term = outcome * weight;
            }
            dist.entries[yv] += term;
        }
    }

    double total = 0;
    for (const auto& [yv, p] : dist.entries) total += p;
    if (std::abs(total - 1.0) > 1e-9) {
        throw InternalError("estimated distribution sums to " + std::to_string(total));
    }

    EffectEstimate est;
    est.method = method;
    est.distribution = std::move(dist);
    est.n_effective = rows.size();
    est.forced = forced;
    return est;
}

}  // namespace

DistTable manifest_freq(const Dataset& d, const std::vector<std::string>& scope,
                        const std::vector<std::string>& w, bool require_selection) {
    if (scope.empty()) throw ValidationError("scope must be non-empty");
    std::vector<std::size_t> rows = qualifying_rows(d, w, require_selection);
    std::vector<std::size_t> cols;
    for (const std::string& name : scope) cols.push_back(d.column_index(name));

    DistTable table;
    table.scope = scope;
    for (std::size_t r : rows) {
        table.entries[row_values(d, r, cols, "scope")] += 1;
    }
    double n = static_cast<double>(rows.size());
    for (auto& [cell, count] : table.entries) count /= n;
    return table;
}

EffectEstimate estimate_m_adjustment(const Dataset& d, const MGraph& g, const Assignment& x,
                                     const std::vector<std::string>& y_vars, const NodeSet& z,
                                     const EstimateOptions& options) {
    return estimate_impl(d, g, x, y_vars, z, options, Method::MAdjustment, Formula::Ratio);
}

EffectEstimate estimate_ipw(const Dataset& d, const MGraph& g, const Assignment& x,
                            const std::vector<std::string>& y_vars, const NodeSet& z,
                            const EstimateOptions& options) {
    return estimate_impl(d, g, x, y_vars, z, options, Method::Ipw, Formula::Weighting);
}

EffectEstimate estimate_ms_adjustment(const Dataset& d, const MGraph& g, const Assignment& x,
                                      const std::vector<std::string>& y_vars, const NodeSet& z,
                                      const EstimateOptions& options) {
    return estimate_impl(d, g, x, y_vars, z, options, Method::MsAdjustment, Formula::Ratio);
}

}  // namespace madj
