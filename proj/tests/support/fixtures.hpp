#pragma once

// Shared worked instances used across the unit and acceptance suites: a
// network-traffic relation with weighted attributes, a store database with
// an age/spending policy, a no-fix gadget, and a two-relation join database
// for aggregate query evaluation.

#include <string>

#include "lsfix/model.hpp"
#include "lsfix/parse.hpp"

namespace fixtures {

using namespace lsfix;

// --- Traffic: one relation, weighted fixable attributes ------------------

inline const char* kTrafficSchema =
    "relation Traffic(time: sym key, link: sym key, type: int fix weight 1,"
    " flow: int fix weight 1/100000)";

inline const char* kTrafficIcs = "cap0: DENY Traffic(t, l, y, f), y = 0, f > 1000.";

inline Schema traffic_schema() { return parse_schema(kTrafficSchema); }

inline Instance traffic_db() {
    Instance db(traffic_schema());
    db.add({"Traffic", {std::string("1.1"), std::string("a"), std::int64_t(0), std::int64_t(1100)}});
    db.add({"Traffic", {std::string("1.1"), std::string("b"), std::int64_t(1), std::int64_t(900)}});
    db.add({"Traffic", {std::string("1.3"), std::string("b"), std::int64_t(1), std::int64_t(850)}});
    return db;
}

inline std::vector<DenialConstraint> traffic_ics(const Schema& s) {
    return parse_denials(kTrafficIcs, s);
}

// --- Store: Client/Buy with a two-atom join constraint -------------------

inline const char* kStoreSchema =
    "relation Client(id: int key, age: int fix, money: int fix)\n"
    "relation Buy(id: int key, item: sym key, price: int fix)";

inline const char* kStoreIcs =
    "ic1: DENY Buy(i, t, p), Client(i, a, m), a < 18, p > 25.\n"
    "ic2: DENY Client(i, a, m), a < 18, m > 50.";

inline Schema store_schema() { return parse_schema(kStoreSchema); }

// Tuple ids in insertion order: 0..2 the clients, 3..5 the purchases.
inline Instance store_db() {
    Instance db(store_schema());
    db.add({"Client", {std::int64_t(1), std::int64_t(15), std::int64_t(52)}});
    db.add({"Client", {std::int64_t(2), std::int64_t(16), std::int64_t(51)}});
    db.add({"Client", {std::int64_t(3), std::int64_t(60), std::int64_t(900)}});
    db.add({"Buy", {std::int64_t(1), std::string("CD"), std::int64_t(27)}});
    db.add({"Buy", {std::int64_t(1), std::string("DVD"), std::int64_t(26)}});
    db.add({"Buy", {std::int64_t(3), std::string("DVD"), std::int64_t(40)}});
    return db;
}

inline std::vector<DenialConstraint> store_ics(const Schema& s) {
    return parse_denials(kStoreIcs, s);
}

/// The two least-squares fixes of the store database, both at distance 10.
inline Instance store_fix_prime() {  // lowers the amounts and prices
    Instance db(store_schema());
    db.add({"Client", {std::int64_t(1), std::int64_t(15), std::int64_t(50)}});
    db.add({"Client", {std::int64_t(2), std::int64_t(16), std::int64_t(50)}});
    db.add({"Client", {std::int64_t(3), std::int64_t(60), std::int64_t(900)}});
    db.add({"Buy", {std::int64_t(1), std::string("CD"), std::int64_t(25)}});
    db.add({"Buy", {std::int64_t(1), std::string("DVD"), std::int64_t(25)}});
    db.add({"Buy", {std::int64_t(3), std::string("DVD"), std::int64_t(40)}});
    return db;
}

inline Instance store_fix_double_prime() {  // raises the age instead
    Instance db(store_schema());
    db.add({"Client", {std::int64_t(1), std::int64_t(18), std::int64_t(52)}});
    db.add({"Client", {std::int64_t(2), std::int64_t(16), std::int64_t(50)}});
    db.add({"Client", {std::int64_t(3), std::int64_t(60), std::int64_t(900)}});
    db.add({"Buy", {std::int64_t(1), std::string("CD"), std::int64_t(27)}});
    db.add({"Buy", {std::int64_t(1), std::string("DVD"), std::int64_t(26)}});
    db.add({"Buy", {std::int64_t(3), std::string("DVD"), std::int64_t(40)}});
    return db;
}

// --- NoFix: pairwise-distinct values squeezed into a 2-value range -------

inline const char* kNofixSchema = "relation R(x: int key, y: int fix)";

inline const char* kNofixIcs =
    "d12: DENY R(x1, y), R(x2, y), x1 = 1, x2 = 2.\n"
    "d13: DENY R(x1, y), R(x2, y), x1 = 1, x2 = 3.\n"
    "d23: DENY R(x1, y), R(x2, y), x1 = 2, x2 = 3.\n"
    "hi: DENY R(x, y), y > 3.\n"
    "lo: DENY R(x, y), y < 2.";

inline Schema nofix_schema() { return parse_schema(kNofixSchema); }

inline Instance nofix_db() {
    Instance db(nofix_schema());
    db.add({"R", {std::int64_t(1), std::int64_t(-1)}});
    db.add({"R", {std::int64_t(2), std::int64_t(1)}});
    db.add({"R", {std::int64_t(3), std::int64_t(5)}});
    return db;
}

inline std::vector<DenialConstraint> nofix_ics(const Schema& s) {
    return parse_denials(kNofixIcs, s);
}

// --- RQ: two-relation join database for aggregate evaluation -------------

inline const char* kRqSchema =
    "relation R(a: int key, b: int key)\n"
    "relation Q(a: int key, b: int key, c: int key)";

inline Schema rq_schema() { return parse_schema(kRqSchema); }

inline Instance rq_db() {
    Instance db(rq_schema());
    db.add({"R", {std::int64_t(1), std::int64_t(2)}});
    db.add({"R", {std::int64_t(2), std::int64_t(3)}});
    db.add({"Q", {std::int64_t(2), std::int64_t(5), std::int64_t(9)}});
    db.add({"Q", {std::int64_t(2), std::int64_t(6), std::int64_t(7)}});
    db.add({"Q", {std::int64_t(3), std::int64_t(1), std::int64_t(1)}});
    db.add({"Q", {std::int64_t(3), std::int64_t(1), std::int64_t(5)}});
    db.add({"Q", {std::int64_t(3), std::int64_t(8), std::int64_t(3)}});
    return db;
}

inline const char* kRqQuery = "q(x, y, sum(z)) <- R(x, y), Q(y, z, w), w != 3.";

// --- small helpers --------------------------------------------------------

inline Value iv(std::int64_t v) { return Value(v); }
inline Value sv(std::string s) { return Value(std::move(s)); }

}  // namespace fixtures
