#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lsfix/exact.hpp"
#include "lsfix/parse.hpp"
#include "lsfix/setcover.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace lsfix;
using fixtures::iv;
using fixtures::sv;

TEST_CASE("the traffic database has exactly one least-squares fix") {
    Instance db = fixtures::traffic_db();
    auto ics = fixtures::traffic_ics(db.schema());
    FixResult result = ls_fixes(db, ics);
    REQUIRE(result.fixes.size() == 1);
    REQUIRE(result.min_distance.has_value());
    CHECK(*result.min_distance == Rational(1, 10));
    auto fixed = tuple_by_key(result.fixes[0], "Traffic", {sv("1.1"), sv("a")});
    REQUIRE(fixed.has_value());
    CHECK(fixed->values == std::vector<Value>{sv("1.1"), sv("a"), iv(0), iv(1000)});
}

TEST_CASE("the store database has exactly two least-squares fixes") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    FixResult result = ls_fixes(db, ics);
    REQUIRE(result.min_distance.has_value());
    CHECK(*result.min_distance == Rational(10));
    REQUIRE(result.fixes.size() == 2);
    std::set<Instance> got(result.fixes.begin(), result.fixes.end());
    std::set<Instance> expected{fixtures::store_fix_prime(), fixtures::store_fix_double_prime()};
    CHECK(got == expected);
}

TEST_CASE("the pairwise-distinct gadget has no fix") {
    Instance db = fixtures::nofix_db();
    auto ics = fixtures::nofix_ics(db.schema());
    FixResult result = ls_fixes(db, ics);
    CHECK(result.fixes.empty());
    CHECK_FALSE(result.min_distance.has_value());
    CHECK_FALSE(ne(db, ics));
}

TEST_CASE("decision procedures over the store database") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    CHECK(ne(db, ics));
    CHECK(dfp(db, ics, Rational(10)));
    CHECK_FALSE(dfp(db, ics, Rational(9)));
    CHECK(dfop(db, ics) == Rational(10));
    CHECK_THROWS_AS(dfp(db, ics, Rational(-1)), ModelError);

    Instance consistent = fixtures::store_fix_prime();
    CHECK(dfop(consistent, ics) == Rational(0));
    CHECK(dfp(consistent, ics, Rational(0)));
    CHECK(dfp(db, ics, Rational(0)) == satisfies_all(db, ics));
}

TEST_CASE("fix verification") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());

    FixCheck prime = verify_fix(db, fixtures::store_fix_prime(), ics);
    CHECK(prime.is_fix);
    CHECK(prime.is_ls_fix);

    // A valid fix that is not distance-minimal.
    Instance traffic = fixtures::traffic_db();
    auto traffic_ics = fixtures::traffic_ics(traffic.schema());
    Instance worse = traffic.with_replaced(0, {"Traffic", {sv("1.1"), sv("a"), iv(1), iv(1100)}});
    FixCheck check = verify_fix(traffic, worse, traffic_ics);
    CHECK(check.is_fix);
    CHECK_FALSE(check.is_ls_fix);
    CHECK(distance(traffic, worse) == Rational(1));

    FixCheck self = verify_fix(fixtures::store_fix_prime(), fixtures::store_fix_prime(), ics);
    CHECK(self.is_fix);
    CHECK(self.is_ls_fix);

    FixCheck broken = verify_fix(db, db, ics);
    CHECK_FALSE(broken.is_fix);
}

TEST_CASE("aggregation constraints are refused by the fix search") {
    Schema s = fixtures::store_schema();
    auto set = parse_constraints(
        "d: DENY Client(i, a, m), a < 18, m > 50.\n"
        "a: AGG sum(money) OF Client > 0.",
        s);
    CHECK_THROWS_AS(ls_fixes(fixtures::store_db(), set), UnsupportedConstraint);
}

TEST_CASE("the grid budget is enforced") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    FixSearchConfig tight;
    tight.max_grid_points = 3;
    CHECK_THROWS_AS(ls_fixes(db, ics, tight), CapExceeded);
}

TEST_CASE("every returned fix changes values only to grid candidates") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 25; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 3);
        FixResult result = ls_fixes(problem.db, problem.ics);
        for (const auto& fix : result.fixes) {
            for (std::size_t tid = 0; tid < problem.db.tuple_count(); ++tid) {
                const Tuple& before = problem.db.tuple(tid);
                const RelationSchema& rs = problem.schema.at(before.relation);
                auto key = key_of(before, rs);
                auto after = tuple_by_key(fix, before.relation, key);
                REQUIRE(after.has_value());
                for (auto p : rs.fixable_positions()) {
                    std::int64_t v = as_int(after->values[p]);
                    if (v == as_int(before.values[p])) continue;
                    auto grid = detail::grid_values(problem.db, problem.ics, before.relation, p);
                    CHECK(std::binary_search(grid.begin(), grid.end(), v));
                }
            }
        }
    }
}

TEST_CASE("a variable repeated inside one atom acts as an attribute equality") {
    Schema s = parse_schema("relation T(k: int key, a: int fix, b: int)");
    Instance db(s);
    db.add({"T", {iv(0), iv(9), iv(9)}});
    auto ics = parse_denials("same: DENY T(k, a, a).", s);

    CHECK_FALSE(is_local(ics, s).local);  // the equality touches a fixable attribute
    FixResult result = ls_fixes(db, ics);
    REQUIRE(result.fixes.size() == 2);  // step off the rigid value in either direction
    CHECK(*result.min_distance == Rational(1));

    Instance fine(s);
    fine.add({"T", {iv(0), iv(5), iv(9)}});
    CHECK(satisfies_all(fine, ics));
}

TEST_CASE("attribute-to-attribute constraints search the widened value window") {
    Schema s = parse_schema("relation T(k: int key, a: int fix, b: int)");
    Instance db(s);
    db.add({"T", {iv(0), iv(5), iv(20)}});
    auto ics = parse_denials("eq: DENY T(k, a, b), a != b.", s);
    CHECK(classify_denial(ics[0]) == DenialClass::Extended);

    FixResult result = ls_fixes(db, ics);
    REQUIRE(result.fixes.size() == 1);
    CHECK(*result.min_distance == Rational(225));  // a must meet the rigid column value
    CHECK(tuple_by_key(result.fixes[0], "T", {iv(0)})->values ==
          std::vector<Value>{iv(0), iv(20), iv(20)});

    // A zero window still reaches plain column values.
    FixSearchConfig cfg;
    cfg.window_radius_override = 0;
    FixResult narrow = ls_fixes(db, ics, cfg);
    REQUIRE(narrow.fixes.size() == 1);
    CHECK(*narrow.min_distance == Rational(225));
}

TEST_CASE("exhaustive search agrees with the full-box oracle on tiny instances") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::int64_t> value(-3, 3);
    std::uniform_int_distribution<int> coin(0, 1);
    Schema schema = parse_schema("relation R(k: int key, u: int fix, v: int fix)");
    for (int round = 0; round < 20; ++round) {
        Instance db(schema);
        int n = 1 + round % 2;
        for (int i = 0; i < n; ++i) db.add({"R", {iv(i), value(rng), value(rng)}});
        std::string text;
        int m = 1 + coin(rng);
        for (int c = 0; c < m; ++c) {
            text += "c" + std::to_string(c) + ": DENY R(x, u, v), u " +
                    (coin(rng) ? ">" : "<") + " " + std::to_string(value(rng)) + ", v " +
                    (coin(rng) ? ">" : "<") + " " + std::to_string(value(rng)) + ".\n";
        }
        auto ics = parse_denials(text, schema);
        FixResult got = ls_fixes(db, ics);
        auto expected = oracles::full_scan_ls_fixes(db, ics, 3);
        REQUIRE(got.min_distance.has_value() == expected.min_distance.has_value());
        if (got.min_distance) CHECK(*got.min_distance == *expected.min_distance);
        std::set<Instance> got_set(got.fixes.begin(), got.fixes.end());
        std::set<Instance> expected_set(expected.fixes.begin(), expected.fixes.end());
        CHECK(got_set == expected_set);
    }
}

TEST_CASE("ls-fixes coincide with optimal covers under local constraints") {
    std::mt19937_64 rng(123);
    int nontrivial = 0;
    for (int round = 0; round < 25; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 2);
        FixResult exact = ls_fixes(problem.db, problem.ics);
        CoverInstance ci = build_mwscp(problem.db, problem.ics);
        std::set<Instance> via_covers;
        for (const auto& cover : all_optimal_covers(ci, 64)) {
            Cover norm = star_normalize(cover, ci, problem.db, problem.ics);
            via_covers.insert(apply_cover(problem.db, norm, ci));
        }
        std::set<Instance> via_search(exact.fixes.begin(), exact.fixes.end());
        CHECK(via_search == via_covers);
        if (ci.element_count() > 0) {
            ++nontrivial;
            REQUIRE(exact.min_distance.has_value());
            CHECK(*exact.min_distance == exact_cover(ci, 64).weight);
        }
    }
    CHECK(nontrivial >= 8);
}
