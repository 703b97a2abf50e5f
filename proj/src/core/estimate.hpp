#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/criteria.hpp"
#include "core/mgraph.hpp"

namespace madj {

// Tabular categorical data with NA cells. A selection column, when present,
// is stored apart from the data columns; unselected rows are all-NA by
// format. Indicator columns (R_<var> alongside <var>) are validated against
// the NA pattern at load time and kept as ordinary columns.
struct Dataset {
    std::vector<std::string> columns;
    std::optional<std::string> selection_column;
    std::vector<std::vector<std::optional<std::string>>> rows;
    std::vector<char> selected;  // per row; all 1 when no selection column
    std::map<std::string, std::vector<std::string>> domains;  // sorted distinct non-NA values

    std::size_t column_index(const std::string& name) const;
    std::size_t selected_count() const;
};

// Comma-separated text: first line holds column names; "NA" or an empty cell
// is missing. A column named "S" is treated as the selection column; the
// second overload names it explicitly (or suppresses detection with nullopt).
Dataset load_csv(const std::string& text);
Dataset load_csv(const std::string& text, const std::optional<std::string>& selection_column);

// A distribution over the joint domain of `scope`; absent cells are zero.
struct DistTable {
    std::vector<std::string> scope;
    std::map<std::vector<std::string>, double> entries;
};

// Empirical frequencies of `scope` over the rows where every column in w is
// observed (and, if required, the row is selected).
DistTable manifest_freq(const Dataset& d, const std::vector<std::string>& scope,
                        const std::vector<std::string>& w, bool require_selection);

using Assignment = std::map<std::string, std::string>;

enum class Method { MAdjustment, Ipw, MsAdjustment };

struct EstimateOptions {
    bool force = false;    // estimate even when the criterion rejects z
    double smooth = 0.0;   // additive smoothing over the full joint domain
};

struct EffectEstimate {
    Method method;
    DistTable distribution;  // over y_vars, given do(x)
    std::size_t n_effective;
    bool forced = false;
};

// Covariate-adjustment estimate of P(y | do(x)): sum over z-strata of
// P(y | x, z, R_W = 1) weighted by P(z | R_W = 1), where W is the partially
// observed part of x ∪ y ∪ z in g and probabilities are manifest frequencies.
// Requires the m-criterion for (x, y, z) unless options.force is set.
EffectEstimate estimate_m_adjustment(const Dataset& d, const MGraph& g, const Assignment& x,
                                     const std::vector<std::string>& y_vars, const NodeSet& z,
                                     const EstimateOptions& options = {});

// Inverse-probability-weighting form: sum over z of the manifest joint
// P(y, x, z | R_W = 1) divided by the propensity P(x | z, R_W = 1).
// Algebraically identical to estimate_m_adjustment on the same data.
EffectEstimate estimate_ipw(const Dataset& d, const MGraph& g, const Assignment& x,
                            const std::vector<std::string>& y_vars, const NodeSet& z,
                            const EstimateOptions& options = {});

// Selection-aware variant: all factors additionally condition on selection,
// and the ms-criterion replaces the m-criterion.
EffectEstimate estimate_ms_adjustment(const Dataset& d, const MGraph& g, const Assignment& x,
                                      const std::vector<std::string>& y_vars, const NodeSet& z,
                                      const EstimateOptions& options = {});

}  // namespace madj
