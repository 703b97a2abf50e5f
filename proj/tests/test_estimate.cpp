#include "doctest.h"

#include <cmath>
#include <string>

#include "core/errors.hpp"
#include "core/estimate.hpp"
#include "core/mgraph.hpp"
#include "helpers.hpp"

using namespace madj;
using testutil::graph_fixture;
using testutil::read_file;

namespace {

const char* kTriangleCsv =
    "Z,X,Y\n"
    "0,1,1\n0,1,0\n0,0,0\n0,0,0\n"
    "1,1,1\n1,1,1\n1,0,1\n1,0,0\n";

// Two-mis-covariates sample: 10 rows with V_m1 observed, 2 with it missing.
// Within V_m1=0: P(Y=1|X=1) = 2/3; within V_m1=1: 1/2; P(V_m1=1) = 0.4.
const char* kTwoMisCsv =
    "V_m1,R_V_m1,V_m2,R_V_m2,X,Y\n"
    "0,1,0,1,1,1\n"
    "0,1,0,1,1,1\n"
    "0,1,0,1,1,0\n"
    "0,1,0,1,0,0\n"
    "0,1,0,1,0,0\n"
    "0,1,0,1,0,1\n"
    "1,1,0,1,1,1\n"
    "1,1,0,1,1,0\n"
    "1,1,0,1,0,1\n"
    "1,1,0,1,0,0\n"
    "NA,0,0,1,1,1\n"
    "NA,0,0,1,0,0\n";

double p_of(const EffectEstimate& e, const std::vector<std::string>& value) {
    auto it = e.distribution.entries.find(value);
    REQUIRE(it != e.distribution.entries.end());
    return it->second;
}

}  // namespace

TEST_CASE("csv loading splits the selection column and validates indicators") {
    Dataset d = load_csv(read_file(testutil::fixture_path("selection_missing.csv")));
    CHECK(d.columns == std::vector<std::string>{"X", "R_X", "Y"});
    CHECK(d.selection_column == std::string("S"));
    CHECK(d.rows.size() == 5);
    CHECK(d.selected == std::vector<char>{1, 1, 0, 1, 0});
    CHECK(d.selected_count() == 3);
    CHECK(d.domains.at("X") == std::vector<std::string>{"0", "1"});
    CHECK(d.domains.at("Y") == std::vector<std::string>{"0", "1"});
    CHECK(d.column_index("R_X") == 1);
    CHECK_THROWS_WITH_AS(d.column_index("S"), doctest::Contains("no column"),
                         ValidationError);

    // The third row is unselected, hence all-NA.
    CHECK_FALSE(d.rows[2][0].has_value());
    CHECK_FALSE(d.rows[2][2].has_value());
    // Row four keeps Y while X is masked with R_X = 0.
    CHECK_FALSE(d.rows[3][0].has_value());
    CHECK(d.rows[3][2] == std::string("1"));
}

TEST_CASE("csv loading accepts empty cells as missing and trims nothing else") {
    Dataset d = load_csv("A,R_A\n,0\nx y,1\n", std::nullopt);
    CHECK_FALSE(d.rows[0][0].has_value());
    CHECK(d.rows[1][0] == std::string("x y"));
    CHECK(d.domains.at("A") == std::vector<std::string>{"x y"});
}

TEST_CASE("csv structural errors are parse errors with row numbers") {
    CHECK_THROWS_AS(load_csv(""), ParseError);
    CHECK_THROWS_AS(load_csv("X,Y\n"), ParseError);
    CHECK_THROWS_WITH_AS(load_csv("X,X\n0,0\n"), doctest::Contains("duplicate"),
                         ParseError);
    CHECK_THROWS_WITH_AS(load_csv("X,Y\n0\n"), doctest::Contains("expected"),
                         ParseError);
    CHECK_THROWS_WITH_AS(load_csv("X,S\n0,2\n"), doctest::Contains("must be 0 or 1"),
                         ParseError);
}

TEST_CASE("indicator columns must match the NA pattern of their targets") {
    // R says observed but the value is NA.
    CHECK_THROWS_AS(load_csv("X,R_X\nNA,1\n"), ParseError);
    // R says missing but a value is present.
    CHECK_THROWS_AS(load_csv("X,R_X\n0,0\n"), ParseError);
    // R itself may not be NA on a selected row.
    CHECK_THROWS_AS(load_csv("X,R_X\n0,NA\n"), ParseError);
    CHECK_THROWS_AS(load_csv("X,R_X\n0,2\n"), ParseError);
    // Unselected rows must be fully NA.
    CHECK_THROWS_AS(load_csv("X,R_X,S\n0,1,0\n"), ParseError);
    // All consistent: fine, including unselected all-NA rows.
    Dataset ok = load_csv("X,R_X,S\n0,1,1\nNA,0,1\nNA,NA,0\n");
    CHECK(ok.rows.size() == 3);
}

TEST_CASE("the selection column is found by name, not position") {
    Dataset named = load_csv("sel,X\n1,0\n0,NA\n", std::string("sel"));
    CHECK(named.selection_column == std::string("sel"));
    CHECK(named.columns == std::vector<std::string>{"X"});

    // Suppressing detection keeps S as an ordinary variable.
    Dataset plain = load_csv("S,X\n1,0\n0,1\n", std::nullopt);
    CHECK_FALSE(plain.selection_column.has_value());
    CHECK(plain.columns == std::vector<std::string>{"S", "X"});

    // Asking for a missing column quietly yields a selection-free dataset.
    Dataset absent = load_csv("X,Y\n0,1\n", std::string("S"));
    CHECK_FALSE(absent.selection_column.has_value());
}

TEST_CASE("manifest frequencies use only rows whose w-part is observed") {
    Dataset d = load_csv(read_file(testutil::fixture_path("selection_missing.csv")));
    DistTable t = manifest_freq(d, {"Y"}, {"X"}, true);
    CHECK(t.entries.at({"0"}) == doctest::Approx(0.5));
    CHECK(t.entries.at({"1"}) == doctest::Approx(0.5));

    // Without the X-observed restriction, all three selected rows count.
    DistTable all = manifest_freq(d, {"Y"}, {}, true);
    CHECK(all.entries.at({"1"}) == doctest::Approx(2.0 / 3));

    Dataset no_sel = load_csv("X,Y\n0,1\n1,1\n");
    CHECK_THROWS_WITH_AS(manifest_freq(no_sel, {"Y"}, {}, true),
                         doctest::Contains("selection"), ValidationError);
    CHECK(manifest_freq(no_sel, {"Y"}, {}, false).entries.at({"1"}) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(manifest_freq(no_sel, {"W"}, {}, false), ValidationError);
}

TEST_CASE("adjustment estimation reproduces hand-computed frequencies") {
    MGraph g = graph_fixture("confounded_triangle.mg");
    Dataset d = load_csv(kTriangleCsv);
    EffectEstimate e = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"Z"});
    CHECK(e.method == Method::MAdjustment);
    CHECK_FALSE(e.forced);
    CHECK(e.n_effective == 8);
    CHECK(e.distribution.scope == std::vector<std::string>{"Y"});
    CHECK(p_of(e, {"1"}) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p_of(e, {"0"}) == doctest::Approx(0.25).epsilon(1e-12));

    EffectEstimate e0 = estimate_m_adjustment(d, g, {{"X", "0"}}, {"Y"}, {"Z"});
    CHECK(p_of(e0, {"1"}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("partially observed covariates restrict to their manifest rows") {
    MGraph g = graph_fixture("two_mis_covariates.mg");
    Dataset d = load_csv(kTwoMisCsv);
    EffectEstimate e = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"V_m1"});
    CHECK(e.n_effective == 10);
    CHECK(p_of(e, {"1"}) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(p_of(e, {"0"}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("the weighting form matches the stratified form to float precision") {
    MGraph g = graph_fixture("two_mis_covariates.mg");
    Dataset d = load_csv(kTwoMisCsv);
    EffectEstimate strat = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"V_m1"});
    EffectEstimate ipw = estimate_ipw(d, g, {{"X", "1"}}, {"Y"}, {"V_m1"});
    CHECK(ipw.method == Method::Ipw);
    for (const auto& [value, p] : strat.distribution.entries) {
        CHECK(std::abs(p - ipw.distribution.entries.at(value)) < 1e-12);
    }
}

TEST_CASE("invalid adjustment sets are rejected unless forced") {
    MGraph g = graph_fixture("two_mis_covariates.mg");
    Dataset d = load_csv(kTwoMisCsv);
    CHECK_THROWS_WITH_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {}),
                         doctest::Contains("failed condition"), ValidationError);
    EstimateOptions force;
    force.force = true;
    EffectEstimate e = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {}, force);
    CHECK(e.forced);
    // Complete-case conditional P(Y=1 | X=1): 4 of 6 manifest X=1 rows.
    CHECK(p_of(e, {"1"}) == doctest::Approx(4.0 / 6).epsilon(1e-12));
}

TEST_CASE("plain-missingness estimators refuse selection graphs even forced") {
    MGraph g = graph_fixture("selection_pair.mg");
    Dataset d = load_csv("X,Y,S\n0,1,1\n1,1,1\n");
    EstimateOptions force;
    force.force = true;
    CHECK_THROWS_WITH_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {}, force),
                         doctest::Contains("ms criterion"), ValidationError);
    CHECK_THROWS_AS(estimate_ipw(d, g, {{"X", "1"}}, {"Y"}, {}, force), ValidationError);
}

TEST_CASE("selection-aware estimation conditions every factor on selection") {
    MGraph g = graph_fixture("selection_pair.mg");
    Dataset d = load_csv(
        "X,Y,S\n"
        "1,1,1\n1,0,1\n0,0,1\n0,1,1\n0,0,1\n"
        "NA,NA,0\n");
    EffectEstimate e = estimate_ms_adjustment(d, g, {{"X", "1"}}, {"Y"}, {});
    CHECK(e.method == Method::MsAdjustment);
    CHECK(e.n_effective == 5);
    CHECK(p_of(e, {"1"}) == doctest::Approx(0.5).epsilon(1e-12));

    // Same data without the selection column: every row counts as selected.
    MGraph plain = parse_mgraph("node X obs\nnode Y obs\nedge X -> Y\n");
    Dataset d2 = load_csv("X,Y\n1,1\n1,0\n0,0\n0,1\n0,0\n");
    EffectEstimate e2 = estimate_ms_adjustment(d2, plain, {{"X", "1"}}, {"Y"}, {});
    CHECK(p_of(e2, {"1"}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forced complete-case estimation works on the published sample") {
    MGraph g = graph_fixture("selection_mnar_pair.mg");
    Dataset d = load_csv(read_file(testutil::fixture_path("selection_missing.csv")));
    EstimateOptions force;
    force.force = true;
    EffectEstimate e = estimate_ms_adjustment(d, g, {{"X", "1"}}, {"Y"}, {}, force);
    CHECK(e.forced);
    CHECK(e.n_effective == 2);  // rows with X observed among the selected three
    CHECK(p_of(e, {"0"}) == doctest::Approx(1.0));
    CHECK(p_of(e, {"1"}) == doctest::Approx(0.0));
}

TEST_CASE("positivity violations are reported, and smoothing repairs them") {
    MGraph g = graph_fixture("confounded_triangle.mg");
    Dataset d = load_csv("Z,X,Y\n0,1,1\n0,0,0\n1,0,0\n1,0,1\n");
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"Z"}),
                    PositivityError);

    EstimateOptions smooth;
    smooth.smooth = 1.0;
    EffectEstimate e = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"Z"}, smooth);
    // With add-one smoothing: P(z) = 1/2 each; P(Y=1|X=1,Z=0) = 2/3;
    // P(Y=1|X=1,Z=1) = 1/2; total 7/12.
    CHECK(p_of(e, {"1"}) == doctest::Approx(7.0 / 12).epsilon(1e-12));
    CHECK(p_of(e, {"0"}) == doctest::Approx(5.0 / 12).epsilon(1e-12));

    // A treatment value outside the observed domain cannot be estimated.
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {{"X", "7"}}, {"Y"}, {"Z"}, smooth),
                    PositivityError);
}

TEST_CASE("estimates form a probability distribution over the outcome domain") {
    MGraph g = graph_fixture("confounded_triangle.mg");
    Dataset d = load_csv(kTriangleCsv);
    EffectEstimate e = estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"Z"});
    double total = 0;
    for (const auto& [value, p] : e.distribution.entries) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimation argument validation") {
    MGraph g = graph_fixture("confounded_triangle.mg");
    Dataset d = load_csv(kTriangleCsv);
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {}, {"Y"}, {"Z"}), ValidationError);
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {}, {"Z"}), ValidationError);
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y", "Y"}, {"Z"}),
                    ValidationError);
    EstimateOptions bad;
    bad.smooth = -0.5;
    CHECK_THROWS_AS(estimate_m_adjustment(d, g, {{"X", "1"}}, {"Y"}, {"Z"}, bad),
                    ValidationError);
}
