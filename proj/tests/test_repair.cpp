#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lsfix/parse.hpp"
#include "lsfix/repair.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace lsfix;
using fixtures::iv;
using fixtures::sv;

TEST_CASE("constraint satisfaction on the worked examples") {
    Instance traffic = fixtures::traffic_db();
    auto traffic_ics = fixtures::traffic_ics(traffic.schema());
    CHECK_FALSE(satisfies(traffic, traffic_ics[0]));

    Instance empty(fixtures::store_schema());
    auto store_ics = fixtures::store_ics(empty.schema());
    CHECK(satisfies(empty, store_ics[0]));
    CHECK(satisfies(empty, store_ics[1]));

    CHECK(satisfies_all(fixtures::store_fix_prime(), store_ics));
    CHECK(satisfies_all(fixtures::store_fix_double_prime(), store_ics));
    CHECK_FALSE(satisfies_all(fixtures::store_db(), store_ics));
}

TEST_CASE("aggregation constraints are checked by direct aggregation") {
    Schema s = fixtures::store_schema();
    Instance db = fixtures::store_db();
    auto holds = [&](const char* text) {
        auto set = parse_constraints(text, s);
        return satisfies(db, set.constraints[0]);
    };
    // money column: 52 + 51 + 900 = 1003
    CHECK(holds("a: AGG sum(money) OF Client > 1000."));
    CHECK_FALSE(holds("a: AGG sum(money) OF Client <= 1000."));
    CHECK(holds("a: AGG count(money : age < 18) OF Client = 2."));
    CHECK(holds("a: AGG avg(price) OF Buy = 31."));
    CHECK(holds("a: AGG sum(age + money) OF Client = 1094."));
    // avg over an empty selection cannot witness a violation
    CHECK(holds("a: AGG avg(money : age > 1000) OF Client = 123."));
    // two-sided: sum of prices (93) vs sum of ages (91)
    CHECK(holds("a: AGG sum(price) OF Buy != sum(age) OF Client."));
}

TEST_CASE("violation sets on the store database") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());

    auto vs1 = violation_sets(db, ics[0]);
    REQUIRE(vs1.size() == 2);
    CHECK(vs1[0].tuples == std::vector<std::size_t>{0, 3});
    CHECK(vs1[1].tuples == std::vector<std::size_t>{0, 4});

    auto vs2 = violation_sets(db, ics[1]);
    REQUIRE(vs2.size() == 2);
    CHECK(vs2[0].tuples == std::vector<std::size_t>{0});
    CHECK(vs2[1].tuples == std::vector<std::size_t>{1});

    Instance consistent = fixtures::store_fix_prime();
    CHECK(violation_sets(consistent, ics[0]).empty());
    CHECK(violation_sets(consistent, ics[1]).empty());
}

TEST_CASE("violation sets reject aggregation constraints") {
    Schema s = fixtures::store_schema();
    auto set = parse_constraints("a: AGG sum(money) OF Client > 0.", s);
    CHECK_THROWS_AS(violation_sets(fixtures::store_db(), set.constraints[0]),
                    UnsupportedConstraint);
}

TEST_CASE("conflict hypergraph of the store database") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    ConflictHypergraph g = conflict_hypergraph(db, ics);
    REQUIRE(g.edges.size() == 4);
    // Edges arrive per constraint: the two joins, then the two singletons.
    CHECK(g.edges[0].tuples == std::vector<std::size_t>{0, 3});
    CHECK(g.edges[1].tuples == std::vector<std::size_t>{0, 4});
    CHECK(g.edges[2].tuples == std::vector<std::size_t>{0});
    CHECK(g.edges[3].tuples == std::vector<std::size_t>{1});
    CHECK(g.edges[0].constraint == "ic1");
    CHECK(g.edges[2].constraint == "ic2");
    CHECK(g.edges_containing(0) == std::vector<std::size_t>{0, 1, 2});

    CHECK(conflict_hypergraph(db, {}).edges.empty());
}

TEST_CASE("identical violation sets under different labels stay distinct") {
    Schema s = parse_schema("relation R(k: int key, y: int fix)");
    Instance db(s);
    db.add({"R", {iv(0), iv(9)}});
    auto ics = parse_denials("a: DENY R(x, y), y > 5.\nb: DENY R(x, y), y > 5.", s);
    ConflictHypergraph g = conflict_hypergraph(db, ics);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0].tuples == g.edges[1].tuples);
    CHECK(g.edges[0].constraint == "a");
    CHECK(g.edges[1].constraint == "b");
    // A single local fix resolves both labelled copies at once.
    auto fixes = local_fixes(db, ics, 0, g);
    REQUIRE(fixes.size() == 1);
    CHECK(fixes[0].resolved == std::set<std::size_t>{0, 1});
}

TEST_CASE("symbol constants filter by byte equality") {
    Schema s = fixtures::store_schema();
    Instance db = fixtures::store_db();
    auto cd = parse_denials("g: DENY Buy(i, t, p), t = 'CD', p >= 27.", s);
    CHECK_FALSE(satisfies(db, cd[0]));
    auto lp = parse_denials("g: DENY Buy(i, t, p), t = 'LP', p >= 27.", s);
    CHECK(satisfies(db, lp[0]));
    auto ne_sym = parse_denials("g: DENY Buy(i, t, p), t != 'DVD', p > 26.", s);
    CHECK_FALSE(satisfies(db, ne_sym[0]));  // the CD purchase matches
}

TEST_CASE("violation sets match the subset-scan oracle on random instances") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 40; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 3);
        for (const auto& dc : problem.ics) {
            auto got = violation_sets(problem.db, dc);
            std::vector<std::vector<std::size_t>> got_sets;
            for (const auto& v : got) got_sets.push_back(v.tuples);
            std::sort(got_sets.begin(), got_sets.end());
            CHECK(got_sets == oracles::brute_force_violation_sets(problem.db, dc));
        }
    }
}

TEST_CASE("minimality: removing any tuple from a violation set satisfies the constraint") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    for (const auto& dc : ics) {
        for (const auto& edge : violation_sets(db, dc)) {
            for (std::size_t skip : edge.tuples) {
                std::vector<const Tuple*> rest;
                for (std::size_t t : edge.tuples)
                    if (t != skip) rest.push_back(&db.tuple(t));
                CHECK(detail::denial_satisfied_over(rest, dc));
            }
        }
    }
}

TEST_CASE("locality classification") {
    Instance store = fixtures::store_db();
    auto store_ics = fixtures::store_ics(store.schema());
    CHECK(is_local(store_ics, store.schema()).local);

    Instance nofix = fixtures::nofix_db();
    auto nofix_ics = fixtures::nofix_ics(nofix.schema());
    LocalityReport report = is_local(nofix_ics, nofix.schema());
    CHECK_FALSE(report.local);  // the join variable y is fixable
    REQUIRE_FALSE(report.diagnostics.empty());

    CHECK(is_local({}, store.schema()).local);

    // An equality on a fixable attribute bounds it from both sides.
    Schema traffic = fixtures::traffic_schema();
    auto traffic_ics = fixtures::traffic_ics(traffic);
    CHECK_FALSE(is_local(traffic_ics, traffic).local);

    // A denial without any fixable built-in is rejected by clause (b).
    Schema s = parse_schema("relation T(k: int key, r: int, f: int fix)");
    auto no_fix_builtin = parse_denials("c: DENY T(k, r, f), r > 5.", s);
    CHECK_FALSE(is_local(no_fix_builtin, s).local);
}

TEST_CASE("local fixes on the store database") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    ConflictHypergraph g = conflict_hypergraph(db, ics);

    // First client: lowering the money resolves only its singleton edge,
    // raising the age resolves all three incident edges.
    auto fixes_t1 = local_fixes(db, ics, 0, g);
    REQUIRE(fixes_t1.size() == 2);
    CHECK(fixes_t1[0].fixed.values == std::vector<Value>{iv(1), iv(15), iv(50)});
    CHECK(fixes_t1[0].resolved == std::set<std::size_t>{2});
    CHECK(fixes_t1[0].cost == Rational(4));
    CHECK(fixes_t1[1].fixed.values == std::vector<Value>{iv(1), iv(18), iv(52)});
    CHECK(fixes_t1[1].resolved == std::set<std::size_t>{0, 1, 2});
    CHECK(fixes_t1[1].cost == Rational(9));

    // The consistent client has no local fix.
    CHECK(local_fixes(db, ics, 2, g).empty());

    // First purchase: dropping the price to the border.
    auto fixes_t4 = local_fixes(db, ics, 3, g);
    REQUIRE(fixes_t4.size() == 1);
    CHECK(fixes_t4[0].fixed.values == std::vector<Value>{iv(1), sv("CD"), iv(25)});
    CHECK(fixes_t4[0].cost == Rational(4));

    auto fixes_t2 = local_fixes(db, ics, 1, g);
    REQUIRE(fixes_t2.size() == 1);
    CHECK(fixes_t2[0].fixed.values == std::vector<Value>{iv(2), iv(16), iv(50)});
    CHECK(fixes_t2[0].cost == Rational(1));
}

TEST_CASE("combining local fixes reaches the union of resolved sets") {
    Instance db = fixtures::store_db();
    auto ics = fixtures::store_ics(db.schema());
    ConflictHypergraph g = conflict_hypergraph(db, ics);
    auto fixes_t1 = local_fixes(db, ics, 0, g);
    REQUIRE(fixes_t1.size() == 2);

    LocalFix combined = combine_local_fixes(db, ics, {fixes_t1[0], fixes_t1[1]}, g);
    CHECK(combined.resolved == std::set<std::size_t>{0, 1, 2});
    CHECK(combined.cost == Rational(9));
    CHECK(combined.fixed.values == std::vector<Value>{iv(1), iv(18), iv(52)});

    LocalFix single = combine_local_fixes(db, ics, {fixes_t1[0]}, g);
    CHECK(single.resolved.count(2) == 1);
    CHECK(single.cost == fixes_t1[0].cost);
}

TEST_CASE("local fixes never create new violations under local constraints") {
    std::mt19937_64 rng(515);
    int checked = 0;
    for (int round = 0; round < 50; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 3);
        REQUIRE(is_local(problem.ics, problem.schema).local);
        ConflictHypergraph g = conflict_hypergraph(problem.db, problem.ics);
        std::set<std::vector<std::size_t>> before;
        for (const auto& e : g.edges) before.insert(e.tuples);
        for (std::size_t tid = 0; tid < problem.db.tuple_count(); ++tid) {
            for (const auto& fix : local_fixes(problem.db, problem.ics, tid, g)) {
                Instance patched = problem.db.with_replaced(tid, fix.fixed);
                ConflictHypergraph after = conflict_hypergraph(patched, problem.ics);
                for (const auto& e : after.edges) {
                    CHECK(before.count(e.tuples));  // nothing new appears
                }
                ++checked;
            }
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("sum of input costs bounds the combined fix cost") {
    std::mt19937_64 rng(616);
    int checked = 0;
    for (int round = 0; round < 30; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 3);
        ConflictHypergraph g = conflict_hypergraph(problem.db, problem.ics);
        for (std::size_t tid = 0; tid < problem.db.tuple_count(); ++tid) {
            auto fixes = local_fixes(problem.db, problem.ics, tid, g);
            if (fixes.size() < 2) continue;
            LocalFix combined = combine_local_fixes(problem.db, problem.ics, fixes, g);
            Rational sum(0);
            for (const auto& f : fixes) sum += f.cost;
            CHECK(combined.cost <= sum);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("every inconsistent tuple under local constraints has a local fix") {
    std::mt19937_64 rng(717);
    for (int round = 0; round < 30; ++round) {
        auto problem = generators::random_local_problem(rng, 5, 3);
        ConflictHypergraph g = conflict_hypergraph(problem.db, problem.ics);
        for (std::size_t tid = 0; tid < problem.db.tuple_count(); ++tid) {
            if (g.edges_containing(tid).empty()) continue;
            const RelationSchema& rs = problem.schema.at(problem.db.tuple(tid).relation);
            if (rs.fixable_positions().empty()) continue;
            CHECK_FALSE(local_fixes(problem.db, problem.ics, tid, g).empty());
        }
    }
}
