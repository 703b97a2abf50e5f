#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "madj/madj.h"

namespace {

// All library failures surface the same way: message on stderr, exit 2.
int die() {
    std::cerr << "error: " << madj_last_error() << "\n";
    return 2;
}

int usage_error(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 2;
}

struct GraphHandle {
    madj_graph* g = nullptr;
    ~GraphHandle() { madj_graph_free(g); }
};

struct ScmHandle {
    madj_scm* s = nullptr;
    ~ScmHandle() { madj_scm_free(s); }
};

struct DatasetHandle {
    madj_dataset* d = nullptr;
    ~DatasetHandle() { madj_dataset_free(d); }
};

struct OwnedString {
    char* s = nullptr;
    ~OwnedString() { madj_string_free(s); }
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(',', start);
        std::string item = s.substr(start, comma - start);
        std::size_t b = item.find_first_not_of(" \t");
        if (b != std::string::npos) {
            std::size_t e = item.find_last_not_of(" \t");
            out.push_back(item.substr(b, e - b + 1));
        } else {
            out.push_back("");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// -1: decide from the graph; 0: plain; 1: selection-aware.
struct ModeFlags {
    bool ms = false;
    bool no_ms = false;

    int resolve(const madj_graph* g, int& error_out) const {
        if (ms && no_ms) {
            error_out = usage_error("--ms and --no-ms are mutually exclusive");
            return -1;
        }
        if (ms) return 1;
        if (no_ms) return 0;
        return madj_graph_has_selection(g);
    }
};

int run_check(const std::string& graph_path, const std::string& x, const std::string& y,
              const std::string& z, const ModeFlags& mode) {
    GraphHandle gh;
    if (madj_graph_read_file(graph_path.c_str(), &gh.g) != MADJ_OK) return die();
    int err = 0;
    int ms = mode.resolve(gh.g, err);
    if (ms < 0) return err;

    OwnedString out;
    madj_criterion criterion = ms ? MADJ_CRITERION_MS : MADJ_CRITERION_M;
    if (madj_check(gh.g, criterion, x.c_str(), y.c_str(), z.c_str(), &out.s) != MADJ_OK) {
        return die();
    }
    std::cout << out.s << "\n";
    return nlohmann::json::parse(out.s).at("valid").get<bool>() ? 0 : 1;
}

struct ListState {
    std::uint64_t limit = 0;  // 0: unlimited
    std::uint64_t printed = 0;
};

extern "C" int print_set_line(void* user, const char* json_array) {
    auto* state = static_cast<ListState*>(user);
    std::cout << json_array << "\n" << std::flush;
    state->printed += 1;
    return (state->limit != 0 && state->printed >= state->limit) ? 1 : 0;
}

int run_list(const std::string& graph_path, const std::string& x, const std::string& y,
             std::uint64_t limit, const ModeFlags& mode) {
    GraphHandle gh;
    if (madj_graph_read_file(graph_path.c_str(), &gh.g) != MADJ_OK) return die();
    int err = 0;
    int ms = mode.resolve(gh.g, err);
    if (ms < 0) return err;

    ListState state;
    state.limit = limit;
    std::uint64_t count = 0;
    if (madj_list(gh.g, ms, x.c_str(), y.c_str(), print_set_line, &state, &count) != MADJ_OK) {
        return die();
    }
    std::cout << nlohmann::json{{"count", count}}.dump() << "\n";
    return count > 0 ? 0 : 1;
}

int run_min(const std::string& graph_path, const std::string& x, const std::string& y,
            const ModeFlags& mode) {
    GraphHandle gh;
    if (madj_graph_read_file(graph_path.c_str(), &gh.g) != MADJ_OK) return die();
    int err = 0;
    int ms = mode.resolve(gh.g, err);
    if (ms < 0) return err;

    OwnedString out;
    if (madj_min_adj_set(gh.g, ms, x.c_str(), y.c_str(), &out.s) != MADJ_OK) return die();
    std::cout << out.s << "\n";
    return std::string(out.s) == "null" ? 1 : 0;
}

int run_estimate(const std::string& graph_path, const std::string& data_path,
                 const std::string& x, const std::string& x_values, const std::string& y,
                 const std::string& z, bool ipw, bool force, double smooth,
                 const ModeFlags& mode) {
    GraphHandle gh;
    if (madj_graph_read_file(graph_path.c_str(), &gh.g) != MADJ_OK) return die();
    int err = 0;
    int ms = mode.resolve(gh.g, err);
    if (ms < 0) return err;

    std::vector<std::string> names = split_commas(x);
    std::vector<std::string> values = split_commas(x_values);
    if (names.size() != values.size()) {
        return usage_error("--x lists " + std::to_string(names.size()) +
                           " variables but --x-values lists " + std::to_string(values.size()));
    }
    std::string assign;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) assign += ",";
        assign += names[i] + "=" + values[i];
    }

    // The dataset's selection column (if any) is the graph's selection node;
    // a graph without one reads the file as plain data.
    OwnedString selection;
    if (madj_graph_selection_name(gh.g, &selection.s) != MADJ_OK) return die();
    DatasetHandle dh;
    if (madj_dataset_read_file(data_path.c_str(), selection.s, &dh.d) != MADJ_OK) return die();

    madj_method method = ipw ? MADJ_METHOD_IPW : (ms ? MADJ_METHOD_MS : MADJ_METHOD_M);
    OwnedString out;
    if (madj_estimate(dh.d, gh.g, method, assign.c_str(), y.c_str(), z.c_str(), force ? 1 : 0,
                      smooth, &out.s) != MADJ_OK) {
        return die();
    }
    std::cout << out.s << "\n";
    return 0;
}

int run_simulate(const std::string& scm_path, std::uint64_t n, bool has_seed,
                 std::uint64_t seed) {
    ScmHandle sh;
    if (madj_scm_read_file(scm_path.c_str(), &sh.s) != MADJ_OK) return die();
    OwnedString out;
    if (madj_scm_sample_csv(sh.s, n, has_seed ? 1 : 0, seed, &out.s) != MADJ_OK) return die();
    std::cout << out.s;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Adjustment-set identification, effect estimation, and simulation for causal graphs "
        "with missing data and selection"};
    app.require_subcommand(1);

    std::string graph_path, data_path, scm_path;
    std::string x, y, z, x_values;
    ModeFlags mode;
    bool json_flag = false;  // JSON is already the default output; accepted for explicitness
    bool ipw = false, force = false;
    double smooth = 0.0;
    std::uint64_t limit = 0, n = 0, seed = 0;
    bool has_seed = false;

    auto add_mode = [&](CLI::App* sub) {
        sub->add_flag("--ms", mode.ms, "use the selection-aware criterion");
        sub->add_flag("--no-ms", mode.no_ms, "ignore any selection node handling");
        sub->add_flag("--json", json_flag, "emit JSON (the default)");
    };

    CLI::App* check = app.add_subcommand("check", "test one covariate set against the criterion");
    check->add_option("graph", graph_path, "graph file")->required();
    check->add_option("--x", x, "treatment variables (comma-separated)")->required();
    check->add_option("--y", y, "outcome variables (comma-separated)")->required();
    check->add_option("--z", z, "candidate covariate set (comma-separated)");
    add_mode(check);

    CLI::App* list = app.add_subcommand("list", "stream every valid covariate set");
    list->add_option("graph", graph_path, "graph file")->required();
    list->add_option("--x", x, "treatment variables")->required();
    list->add_option("--y", y, "outcome variables")->required();
    list->add_option("--limit", limit, "stop after this many sets");
    add_mode(list);

    CLI::App* min = app.add_subcommand("min", "find a minimum-size valid covariate set");
    min->add_option("graph", graph_path, "graph file")->required();
    min->add_option("--x", x, "treatment variables")->required();
    min->add_option("--y", y, "outcome variables")->required();
    add_mode(min);

    CLI::App* estimate =
        app.add_subcommand("estimate", "estimate P(y | do(x)) from incomplete data");
    estimate->add_option("graph", graph_path, "graph file")->required();
    estimate->add_option("data", data_path, "csv file")->required();
    estimate->add_option("--x", x, "treatment variables")->required();
    estimate->add_option("--x-values", x_values, "treatment values, aligned with --x")->required();
    estimate->add_option("--y", y, "outcome variables")->required();
    estimate->add_option("--z", z, "covariate set");
    estimate->add_flag("--ipw", ipw, "use the inverse-probability-weighting form");
    estimate->add_flag("--force", force, "estimate even if the criterion rejects z");
    estimate->add_option("--smooth", smooth, "additive smoothing weight per joint cell");
    add_mode(estimate);

    CLI::App* simulate = app.add_subcommand("simulate", "sample a model to CSV on stdout");
    simulate->add_option("scm", scm_path, "model file")->required();
    simulate->add_option("--n", n, "number of rows")->required();
    CLI::Option* seed_opt = simulate->add_option("--seed", seed, "override the model's seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    has_seed = seed_opt->count() > 0;

    if (check->parsed()) return run_check(graph_path, x, y, z, mode);
    if (list->parsed()) return run_list(graph_path, x, y, limit, mode);
    if (min->parsed()) return run_min(graph_path, x, y, mode);
    if (estimate->parsed()) {
        return run_estimate(graph_path, data_path, x, x_values, y, z, ipw, force, smooth, mode);
    }
    if (simulate->parsed()) return run_simulate(scm_path, n, has_seed, seed);
    return usage_error("no command given");
}
