#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include <sys/wait.h>

#include "helpers.hpp"

using nlohmann::json;
using testutil::fixture_path;

namespace {

struct CliResult {
    int code = -1;
    std::string out;  // stdout and stderr combined
};

std::string cli_path() {
    const char* path = std::getenv("MADJ_CLI");
    REQUIRE_MESSAGE(path != nullptr, "MADJ_CLI must point at the command-line binary");
    return path;
}

CliResult run_cli(const std::string& args) {
    std::string cmd = "'" + cli_path() + "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE_MESSAGE(pipe != nullptr, "popen failed for: " << cmd);
    CliResult r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

std::string fx(const std::string& name) { return "'" + fixture_path(name) + "'"; }

}  // namespace

TEST_CASE("help and usage errors") {
    CliResult help = run_cli("--help");
    CHECK(help.code == 0);
    for (const char* sub : {"check", "list", "min", "estimate", "simulate"}) {
        CHECK(help.out.find(sub) != std::string::npos);
    }

    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("check").code == 2);  // missing required options
}

TEST_CASE("check prints a verdict and exits by validity") {
    CliResult ok = run_cli("check " + fx("madj_example.mg") + " --x X_1,X_2 --y Y --z Z_m1");
    CHECK(ok.code == 0);
    json v = json::parse(lines_of(ok.out).at(0));
    CHECK(v.at("criterion") == "m");
    CHECK(v.at("valid") == true);
    CHECK(v.at("failed").empty());

    CliResult bad = run_cli("check " + fx("confounded_mnar.mg") + " --x X --y Y --z Z");
    CHECK(bad.code == 1);
    json b = json::parse(lines_of(bad.out).at(0));
    CHECK(b.at("valid") == false);
    CHECK(b.at("failed") == json::array({"b", "c", "d"}));
    CHECK(b.at("rw") == json::array({"R_X"}));

    // z may be omitted entirely.
    CliResult empty_z = run_cli("check " + fx("mnar_pair.mg") + " --x X --y Y");
    CHECK(empty_z.code == 0);
    CHECK(json::parse(lines_of(empty_z.out).at(0)).at("w") == json::array({"X"}));

    CliResult missing = run_cli("check /nonexistent.mg --x X --y Y");
    CHECK(missing.code == 2);
    CHECK(missing.out.find("cannot read file") != std::string::npos);

    CliResult overlap = run_cli("check " + fx("mnar_pair.mg") + " --x X --y X");
    CHECK(overlap.code == 2);
    CHECK(overlap.out.find("error:") != std::string::npos);
}

TEST_CASE("the criterion mode follows the graph unless overridden") {
    std::string sel = fx("selection_pair.mg");
    CliResult auto_ms = run_cli("check " + sel + " --x X --y Y");
    CHECK(auto_ms.code == 0);
    CHECK(json::parse(lines_of(auto_ms.out).at(0)).at("criterion") == "ms");

    CliResult forced_plain = run_cli("check " + sel + " --x X --y Y --no-ms");
    CHECK(forced_plain.code == 2);
    CHECK(forced_plain.out.find("ms criterion") != std::string::npos);

    CliResult both = run_cli("check " + sel + " --x X --y Y --ms --no-ms");
    CHECK(both.code == 2);
    CHECK(both.out.find("mutually exclusive") != std::string::npos);

    std::string plain = fx("mnar_pair.mg");
    CHECK(json::parse(lines_of(run_cli("check " + plain + " --x X --y Y").out).at(0))
              .at("criterion") == "m");
    CliResult forced_ms = run_cli("check " + plain + " --x X --y Y --ms");
    CHECK(forced_ms.code == 0);
    CHECK(json::parse(lines_of(forced_ms.out).at(0)).at("criterion") == "ms");

    // --json is accepted; output is json either way.
    CliResult with_json = run_cli("check " + plain + " --x X --y Y --json");
    CHECK(with_json.code == 0);
    CHECK(json::parse(lines_of(with_json.out).at(0)).at("criterion") == "m");
}

TEST_CASE("list streams one set per line followed by a count") {
    CliResult all = run_cli("list " + fx("two_mis_covariates.mg") + " --x X --y Y");
    CHECK(all.code == 0);
    std::vector<std::string> lines = lines_of(all.out);
    REQUIRE(lines.size() == 3);
    CHECK(json::parse(lines[0]) == json::array({"V_m1", "V_m2"}));
    CHECK(json::parse(lines[1]) == json::array({"V_m1"}));
    CHECK(json::parse(lines[2]) == json{{"count", 2}});

    CliResult limited = run_cli("list " + fx("two_mis_covariates.mg") + " --x X --y Y --limit 1");
    CHECK(limited.code == 0);
    std::vector<std::string> lim_lines = lines_of(limited.out);
    REQUIRE(lim_lines.size() == 2);
    CHECK(json::parse(lim_lines[0]) == json::array({"V_m1", "V_m2"}));
    CHECK(json::parse(lim_lines[1]) == json{{"count", 1}});

    CliResult none = run_cli("list " + fx("confounded_mnar.mg") + " --x X --y Y");
    CHECK(none.code == 1);
    std::vector<std::string> none_lines = lines_of(none.out);
    REQUIRE(none_lines.size() == 1);
    CHECK(json::parse(none_lines[0]) == json{{"count", 0}});
}

TEST_CASE("min prints a smallest set or null") {
    CliResult found = run_cli("min " + fx("two_mis_covariates.mg") + " --x X --y Y");
    CHECK(found.code == 0);
    json j = json::parse(lines_of(found.out).at(0));
    CHECK(j.at("set") == json::array({"V_m1"}));
    CHECK(j.at("size") == 1);

    CliResult none = run_cli("min " + fx("confounded_mnar.mg") + " --x X --y Y");
    CHECK(none.code == 1);
    CHECK(lines_of(none.out).at(0) == "null");
}

TEST_CASE("estimate reads a graph and a csv and prints the distribution") {
    std::string base = "estimate " + fx("confounded_triangle.mg") + " " +
                       fx("confounded_triangle.csv") + " --x X --x-values 1 --y Y";
    CliResult est = run_cli(base + " --z Z");
    CHECK(est.code == 0);
    json j = json::parse(lines_of(est.out).at(0));
    CHECK(j.at("method") == "m");
    CHECK(j.at("n_effective") == 8);
    CHECK(j.at("forced") == false);
    double p1 = -1;
    for (const auto& cell : j.at("distribution").at("probabilities")) {
        if (cell.at("value") == json::array({"1"})) p1 = cell.at("p").get<double>();
    }
    CHECK(p1 == doctest::Approx(0.75).epsilon(1e-12));

    CliResult ipw = run_cli(base + " --z Z --ipw");
    CHECK(ipw.code == 0);
    CHECK(json::parse(lines_of(ipw.out).at(0)).at("method") == "ipw");

    CliResult rejected = run_cli(base);
    CHECK(rejected.code == 2);
    CHECK(rejected.out.find("failed condition") != std::string::npos);

    CliResult forced = run_cli(base + " --force");
    CHECK(forced.code == 0);
    CHECK(json::parse(lines_of(forced.out).at(0)).at("forced") == true);

    CliResult smoothed = run_cli(base + " --z Z --smooth 0.5");
    CHECK(smoothed.code == 0);
    json s = json::parse(lines_of(smoothed.out).at(0));
    double sp1 = -1;
    for (const auto& cell : s.at("distribution").at("probabilities")) {
        if (cell.at("value") == json::array({"1"})) sp1 = cell.at("p").get<double>();
    }
    CHECK(sp1 == doctest::Approx(2.0 / 3).epsilon(1e-12));

    CliResult mismatch = run_cli("estimate " + fx("confounded_triangle.mg") + " " +
                                 fx("confounded_triangle.csv") +
                                 " --x X --x-values 1,0 --y Y --z Z");
    CHECK(mismatch.code == 2);
    CHECK(mismatch.out.find("--x-values lists 2") != std::string::npos);
}

TEST_CASE("estimate picks up the graph's selection column automatically") {
    CliResult est = run_cli("estimate " + fx("selection_mnar_pair.mg") + " " +
                            fx("selection_missing.csv") + " --x X --x-values 1 --y Y --force");
    CHECK(est.code == 0);
    json j = json::parse(lines_of(est.out).at(0));
    CHECK(j.at("method") == "ms");
    CHECK(j.at("forced") == true);
    CHECK(j.at("n_effective") == 2);
    for (const auto& cell : j.at("distribution").at("probabilities")) {
        if (cell.at("value") == json::array({"0"})) {
            CHECK(cell.at("p").get<double>() == doctest::Approx(1.0));
        }
    }

    CliResult rejected = run_cli("estimate " + fx("selection_mnar_pair.mg") + " " +
                                 fx("selection_missing.csv") + " --x X --x-values 1 --y Y");
    CHECK(rejected.code == 2);
    CHECK(rejected.out.find("failed condition") != std::string::npos);
}

TEST_CASE("simulate writes deterministic csv to stdout") {
    std::string base = "simulate " + fx("two_mis_covariates.scm") + " --n 5";
    CliResult a = run_cli(base);
    CHECK(a.code == 0);
    std::vector<std::string> lines = lines_of(a.out);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "V_m1,R_V_m1,V_m2,R_V_m2,X,Y");

    CHECK(run_cli(base).out == a.out);

    CliResult s1 = run_cli(base + " --seed 7");
    CliResult s2 = run_cli(base + " --seed 7");
    CHECK(s1.code == 0);
    CHECK(s1.out == s2.out);
    CHECK(s1.out != a.out);

    CHECK(run_cli("simulate /nonexistent.scm --n 5").code == 2);
    CHECK(run_cli("simulate " + fx("two_mis_covariates.scm")).code == 2);
}
