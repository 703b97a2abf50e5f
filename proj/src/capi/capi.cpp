#include "madj/madj.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core/criteria.hpp"
#include "core/enumerate.hpp"
#include "core/errors.hpp"
#include "core/estimate.hpp"
#include "core/mgraph.hpp"
#include "core/simulate.hpp"

using nlohmann::json;

struct madj_graph {
    madj::MGraph g;
};
struct madj_dataset {
    madj::Dataset d;
};
struct madj_scm {
    madj::Scm s;
};

namespace {

thread_local std::string t_error;

madj_status fail(madj_status st, const std::string& message) {
    t_error = message;
    return st;
}

struct IoError : madj::Error {
    using madj::Error::Error;
};

// Runs the body, translating exceptions into status codes.
template <typename Fn>
madj_status guarded(Fn&& fn) {
    try {
        fn();
        t_error.clear();
        return MADJ_OK;
    } catch (const IoError& e) {
        return fail(MADJ_ERR_IO, e.what());
    } catch (const madj::ParseError& e) {
        return fail(MADJ_ERR_PARSE, e.what());
    } catch (const madj::PositivityError& e) {
        return fail(MADJ_ERR_POSITIVITY, e.what());
    } catch (const madj::TooLargeError& e) {
        return fail(MADJ_ERR_TOO_LARGE, e.what());
    } catch (const madj::ValidationError& e) {
        return fail(MADJ_ERR_VALIDATION, e.what());
    } catch (const madj::InternalError& e) {
        return fail(MADJ_ERR_INTERNAL, e.what());
    } catch (const std::exception& e) {
        return fail(MADJ_ERR_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string read_file(const char* path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + std::string(path));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read file: " + std::string(path));
    return ss.str();
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const char* text) {
    std::vector<std::string> out;
    if (!text) return out;
    std::string s(text);
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(',', start);
        std::string item = trim(s.substr(start, comma - start));
        if (item.empty()) throw madj::ValidationError("empty item in list '" + s + "'");
        out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

madj::NodeSet split_set(const char* text) {
    std::vector<std::string> items = split_list(text);
    madj::NodeSet out(items.begin(), items.end());
    if (out.size() != items.size()) {
        throw madj::ValidationError("duplicate item in a node list");
    }
    return out;
}

madj::Assignment split_assignment(const char* text) {
    madj::Assignment out;
    for (const std::string& item : split_list(text)) {
        std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
            throw madj::ValidationError("expected name=value, got '" + item + "'");
        }
        std::string name = item.substr(0, eq);
        if (!out.emplace(name, item.substr(eq + 1)).second) {
            throw madj::ValidationError("'" + name + "' assigned twice");
        }
    }
    return out;
}

json set_to_json(const madj::NodeSet& s) {
    json arr = json::array();
    for (const auto& n : s) arr.push_back(n);
    return arr;
}

json verdict_to_json(const madj::Verdict& v, const char* criterion_name) {
    json notes = json::object();
    for (const auto& [label, note] : v.notes) notes[std::string(1, label)] = note;
    json failed = json::array();
    for (char label : v.failed) failed.push_back(std::string(1, label));
    return json{{"criterion", criterion_name}, {"valid", v.valid},      {"failed", failed},
                {"notes", notes},              {"w", set_to_json(v.w)}, {"rw", set_to_json(v.rw)}};
}

json dist_to_json(const madj::DistTable& t) {
    json cells = json::array();
    for (const auto& [value, p] : t.entries) {
        json cell_value = json::array();
        for (const auto& v : value) cell_value.push_back(v);
        cells.push_back(json{{"value", cell_value}, {"p", p}});
    }
    json scope = json::array();
    for (const auto& n : t.scope) scope.push_back(n);
    return json{{"scope", scope}, {"probabilities", cells}};
}

constexpr madj_status kBadArg = MADJ_ERR_ARGUMENT;

}  // namespace

extern "C" {

const char* madj_last_error(void) { return t_error.c_str(); }

void madj_string_free(char* s) { std::free(s); }

madj_status madj_graph_parse(const char* text, madj_graph** out) {
    if (!text || !out) return fail(kBadArg, "text and out must be non-NULL");
    return guarded([&] { *out = new madj_graph{madj::parse_mgraph(text)}; });
}

madj_status madj_graph_read_file(const char* path, madj_graph** out) {
    if (!path || !out) return fail(kBadArg, "path and out must be non-NULL");
    return guarded([&] { *out = new madj_graph{madj::parse_mgraph(read_file(path))}; });
}

madj_status madj_graph_serialize(const madj_graph* g, char** out_text) {
    if (!g || !out_text) return fail(kBadArg, "graph and out must be non-NULL");
    return guarded([&] { *out_text = dup_string(madj::serialize_mgraph(g->g)); });
}

int madj_graph_has_selection(const madj_graph* g) {
    return (g && g->g.selection_node().has_value()) ? 1 : 0;
}

madj_status madj_graph_selection_name(const madj_graph* g, char** out_name) {
    if (!g || !out_name) return fail(kBadArg, "graph and out must be non-NULL");
    return guarded([&] { *out_name = dup_string(g->g.selection_node().value_or("")); });
}

void madj_graph_free(madj_graph* g) { delete g; }

madj_status madj_check(const madj_graph* g, madj_criterion criterion, const char* x,
                       const char* y, const char* z, char** out_json) {
    if (!g || !out_json) return fail(kBadArg, "graph and out must be non-NULL");
    return guarded([&] {
        madj::Query q{split_set(x), split_set(y), split_set(z)};
        madj::CriterionContext ctx(g->g, q.x, q.y);
        madj::Verdict v;
        const char* name = nullptr;
        switch (criterion) {
            case MADJ_CRITERION_BACKDOOR:
                v = ctx.backdoor(q.z);
                name = "backdoor";
                break;
            case MADJ_CRITERION_ADJUSTMENT:
                v = ctx.adjustment(q.z);
                name = "adjustment";
                break;
            case MADJ_CRITERION_M_SUFFICIENT:
                v = ctx.m_sufficient(q.z);
                name = "m-sufficient";
                break;
            case MADJ_CRITERION_M:
                v = ctx.m_criterion(q.z);
                name = "m";
                break;
            case MADJ_CRITERION_MS:
                v = ctx.ms_criterion(q.z);
                name = "ms";
                break;
            default:
                throw madj::ValidationError("unknown criterion code");
        }
        *out_json = dup_string(verdict_to_json(v, name).dump());
    });
}

madj_status madj_list(const madj_graph* g, int ms, const char* x, const char* y,
                      madj_set_callback cb, void* user, uint64_t* out_count) {
    if (!g || !cb) return fail(kBadArg, "graph and callback must be non-NULL");
    return guarded([&] {
        auto mode = ms ? madj::CriterionMode::MS : madj::CriterionMode::M;
        std::size_t count =
            madj::list_madj(g->g, split_set(x), split_set(y), mode, [&](const madj::NodeSet& s) {
                return cb(user, set_to_json(s).dump().c_str()) == 0;
            });
        if (out_count) *out_count = count;
    });
}

madj_status madj_min_adj_set(const madj_graph* g, int ms, const char* x, const char* y,
                             char** out_json) {
    if (!g || !out_json) return fail(kBadArg, "graph and out must be non-NULL");
    return guarded([&] {
        auto mode = ms ? madj::CriterionMode::MS : madj::CriterionMode::M;
        auto result = madj::find_min_adj_set(g->g, split_set(x), split_set(y), mode);
        json j;
        if (result) {
            j = json{{"set", set_to_json(*result)}, {"size", result->size()}};
        }  // else: null
        *out_json = dup_string(j.dump());
    });
}

madj_status madj_dataset_load(const char* csv_text, const char* selection_column,
                              madj_dataset** out) {
    if (!csv_text || !out) return fail(kBadArg, "text and out must be non-NULL");
    return guarded([&] {
        std::optional<std::string> sel;
        if (!selection_column) {
            sel = "S";
        } else if (*selection_column) {
            sel = selection_column;
        }
        *out = new madj_dataset{madj::load_csv(csv_text, sel)};
    });
}

madj_status madj_dataset_read_file(const char* path, const char* selection_column,
                                   madj_dataset** out) {
    if (!path || !out) return fail(kBadArg, "path and out must be non-NULL");
    return guarded([&] {
        std::optional<std::string> sel;
        if (!selection_column) {
            sel = "S";
        } else if (*selection_column) {
            sel = selection_column;
        }
        *out = new madj_dataset{madj::load_csv(read_file(path), sel)};
    });
}

void madj_dataset_free(madj_dataset* d) { delete d; }

madj_status madj_estimate(const madj_dataset* d, const madj_graph* g, madj_method method,
                          const char* x_assign, const char* y, const char* z, int force,
                          double smooth, char** out_json) {
    if (!d || !g || !out_json) return fail(kBadArg, "dataset, graph and out must be non-NULL");
    return guarded([&] {
        madj::Assignment x = split_assignment(x_assign);
        std::vector<std::string> y_vars = split_list(y);
        madj::NodeSet zs = split_set(z);
        madj::EstimateOptions opts;
        opts.force = force != 0;
        opts.smooth = smooth;
        madj::EffectEstimate est;
        const char* name = nullptr;
        switch (method) {
            case MADJ_METHOD_M:
                est = madj::estimate_m_adjustment(d->d, g->g, x, y_vars, zs, opts);
                name = "m";
                break;
            case MADJ_METHOD_IPW:
                est = madj::estimate_ipw(d->d, g->g, x, y_vars, zs, opts);
                name = "ipw";
                break;
            case MADJ_METHOD_MS:
                est = madj::estimate_ms_adjustment(d->d, g->g, x, y_vars, zs, opts);
                name = "ms";
                break;
            default:
                throw madj::ValidationError("unknown method code");
        }
        json j{{"method", name},
               {"n_effective", est.n_effective},
               {"forced", est.forced},
               {"distribution", dist_to_json(est.distribution)}};
        *out_json = dup_string(j.dump());
    });
}

madj_status madj_scm_parse(const char* text, madj_scm** out) {
    if (!text || !out) return fail(kBadArg, "text and out must be non-NULL");
    return guarded([&] { *out = new madj_scm{madj::parse_scm(text)}; });
}

madj_status madj_scm_read_file(const char* path, madj_scm** out) {
    if (!path || !out) return fail(kBadArg, "path and out must be non-NULL");
    return guarded([&] { *out = new madj_scm{madj::parse_scm(read_file(path))}; });
}

madj_status madj_scm_sample_csv(const madj_scm* s, uint64_t n, int has_seed, uint64_t seed,
                                char** out_csv) {
    if (!s || !out_csv) return fail(kBadArg, "model and out must be non-NULL");
    return guarded([&] {
        madj::Scm model = s->s;
        if (has_seed) model.seed = seed;
        *out_csv = dup_string(madj::sample_csv(model, n));
    });
}

madj_status madj_scm_true_effect(const madj_scm* s, const char* x_assign, const char* y,
                                 char** out_json) {
    if (!s || !out_json) return fail(kBadArg, "model and out must be non-NULL");
    return guarded([&] {
        madj::DistTable t =
            madj::true_effect(s->s, split_assignment(x_assign), split_list(y));
        *out_json = dup_string(dist_to_json(t).dump());
    });
}

void madj_scm_free(madj_scm* s) { delete s; }

}  // extern "C"
