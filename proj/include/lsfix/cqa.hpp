#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lsfix/ast.hpp"
#include "lsfix/errors.hpp"
#include "lsfix/exact.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"
#include "lsfix/repair.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// Query evaluation over one instance
// ---------------------------------------------------------------------------

struct AnswerRow {
    std::vector<Value> values;               // head projection
    std::optional<Rational> aggregate;       // filled for aggregate queries

    friend bool operator==(const AnswerRow&, const AnswerRow&) = default;
    friend bool operator<(const AnswerRow& a, const AnswerRow& b) {
        if (a.values != b.values) return values_less(a.values, b.values);
        if (a.aggregate.has_value() != b.aggregate.has_value()) return !a.aggregate.has_value();
        if (a.aggregate && b.aggregate && !(*a.aggregate == *b.aggregate))
            return *a.aggregate < *b.aggregate;
        return false;
    }
};

/// Query answers under set semantics. Ground queries are reported as a
/// boolean instead of rows.
struct AnswerSet {
    std::vector<AnswerRow> rows;  // sorted, duplicate-free
    bool is_boolean = false;
    bool boolean_value = false;
};

namespace detail {

/// Satisfying assignments projected to (head values, witness values), where
/// the witnesses are all body variables outside the head in a canonical
/// order. Distinct witnesses are what aggregates range over.
struct MatchTable {
    std::vector<std::string> witness_vars;
    std::map<std::vector<Value>, std::set<std::vector<Value>>> groups;
};

inline MatchTable collect_matches(const ConjunctiveQuery& q, const Instance& db,
                                  std::size_t budget = kDefaultAssignmentCap) {
    MatchTable table;
    BodyBindings bindings = bind_body(q.atoms, q.comparisons, db.schema(), q.name);
    for (const auto& [var, type] : bindings.types) {
        if (std::find(q.head_vars.begin(), q.head_vars.end(), var) == q.head_vars.end())
            table.witness_vars.push_back(var);
    }
    TupleUniverse u = TupleUniverse::of(db);
    BodyMatcher matcher(u, q.atoms, q.comparisons, budget);
    matcher.run([&](const std::vector<std::size_t>&, const Env& env) {
        std::vector<Value> head;
        for (const auto& v : q.head_vars) head.push_back(env.at(v));
        std::vector<Value> witness;
        for (const auto& v : table.witness_vars) witness.push_back(env.at(v));
        table.groups[head].insert(std::move(witness));
        return true;
    });
    return table;
}

inline Rational aggregate_of(const Aggregate& agg, const std::vector<std::string>& witness_vars,
                             const std::set<std::vector<Value>>& witnesses) {
    std::size_t zpos = std::find(witness_vars.begin(), witness_vars.end(), agg.var) -
                       witness_vars.begin();
    switch (agg.func) {
        case AggFunc::Count: return Rational(static_cast<std::int64_t>(witnesses.size()));
        case AggFunc::CountDistinct: {
            std::set<std::int64_t> distinct;
            std::set<std::string> distinct_sym;
            for (const auto& w : witnesses) {
                if (is_int(w[zpos])) distinct.insert(as_int(w[zpos]));
                else distinct_sym.insert(as_sym(w[zpos]));
            }
            return Rational(static_cast<std::int64_t>(distinct.size() + distinct_sym.size()));
        }
        case AggFunc::Sum: {
            Rational sum(0);
            for (const auto& w : witnesses) sum += Rational(as_int(w[zpos]));
            return sum;
        }
        case AggFunc::Avg: {
            Rational sum(0);
            for (const auto& w : witnesses) sum += Rational(as_int(w[zpos]));
            return sum / Rational(static_cast<std::int64_t>(witnesses.size()));
        }
    }
    throw ModelError("unknown aggregate");
}

}  // namespace detail

/// First-order conjunctive query evaluation, set semantics.
inline AnswerSet eval_conjunctive(const ConjunctiveQuery& q, const Instance& db,
                                  std::size_t budget = kDefaultAssignmentCap) {
    if (q.aggregate) throw ModelError(q.name + ": use eval_aggregate for aggregate queries");
    detail::MatchTable table = detail::collect_matches(q, db, budget);
    AnswerSet out;
    if (q.ground()) {
        out.is_boolean = true;
        out.boolean_value = !table.groups.empty();
        return out;
    }
    for (const auto& [head, witnesses] : table.groups) out.rows.push_back({head, std::nullopt});
    return out;
}

/// Aggregate query evaluation: each answer of the non-aggregate matrix is
/// expanded with the aggregate over its distinct witnesses, so a value z
/// reached through two different witnesses counts twice in a sum. A scalar
/// sum/count over no matches is 0; a scalar avg over no matches yields no
/// row.
inline AnswerSet eval_aggregate(const ConjunctiveQuery& q, const Instance& db,
                                std::size_t budget = kDefaultAssignmentCap) {
    if (!q.aggregate) throw ModelError(q.name + ": not an aggregate query");
    detail::MatchTable table = detail::collect_matches(q, db, budget);
    AnswerSet out;
    for (const auto& [head, witnesses] : table.groups)
        out.rows.push_back(
            {head, detail::aggregate_of(*q.aggregate, table.witness_vars, witnesses)});
    if (q.scalar() && table.groups.empty() && q.aggregate->func != AggFunc::Avg)
        out.rows.push_back({{}, Rational(0)});
    return out;
}

struct AskResult {
    bool value = false;
    bool undefined_avg = false;  // avg over an empty witness set
};

/// ASK agg(z) OP k: evaluates the scalar aggregate and applies the
/// comparison; an undefined average yields false with a warning flag.
inline AskResult eval_aggregate_comparison(const AggregateComparisonQuery& acq, const Instance& db,
                                           std::size_t budget = kDefaultAssignmentCap) {
    AnswerSet answers = eval_aggregate(acq.query, db, budget);
    if (answers.rows.empty()) return {false, true};
    const Rational& value = *answers.rows.front().aggregate;
    Rational threshold(acq.threshold);
    bool holds = false;
    switch (acq.op) {
        case CompareOp::Eq: holds = value == threshold; break;
        case CompareOp::Ne: holds = value != threshold; break;
        case CompareOp::Lt: holds = value < threshold; break;
        case CompareOp::Gt: holds = value > threshold; break;
        case CompareOp::Le: holds = value <= threshold; break;
        case CompareOp::Ge: holds = value >= threshold; break;
    }
    return {holds, false};
}

// ---------------------------------------------------------------------------
// Join graph and the tractable query class
// ---------------------------------------------------------------------------

/// Directed graph over the body atoms: an arc from L to L' when a variable
/// in a non-key position of L reappears in L', and a self-loop when such a
/// variable repeats inside L itself.
struct JoinGraph {
    std::size_t atom_count = 0;
    std::set<std::pair<std::size_t, std::size_t>> arcs;
    std::set<std::size_t> self_loops;
};

inline JoinGraph join_graph(const ConjunctiveQuery& q, const Schema& schema) {
    JoinGraph g;
    g.atom_count = q.atoms.size();
    auto vars_of = [](const Atom& atom) {
        std::set<std::string> vars;
        for (const auto& t : atom.args)
            if (is_var(t)) vars.insert(var_name(t));
        return vars;
    };
    for (std::size_t i = 0; i < q.atoms.size(); ++i) {
        const Atom& li = q.atoms[i];
        const RelationSchema& rs = schema.at(li.relation);
        auto keys = rs.key_positions();
        for (std::size_t p = 0; p < li.args.size(); ++p) {
            if (!is_var(li.args[p])) continue;
            bool key_pos = std::find(keys.begin(), keys.end(), p) != keys.end();
            if (key_pos) continue;
            const std::string& v = var_name(li.args[p]);
            std::size_t occurrences_here = 0;
            for (const auto& t : li.args)
                if (is_var(t) && var_name(t) == v) ++occurrences_here;
            if (occurrences_here >= 2) g.self_loops.insert(i);
            for (std::size_t j = 0; j < q.atoms.size(); ++j) {
                if (j == i) continue;
                if (vars_of(q.atoms[j]).count(v)) g.arcs.insert({i, j});
            }
        }
    }
    return g;
}

struct CTreeReport {
    bool in_ctree = false;
    std::string reason;
};

/// Membership in the class with tractable consistent answering: no repeated
/// relation symbols, forest-shaped join graph, and every non-key-to-key
/// join covering the whole key of the target atom. Aggregate queries are
/// classified through their non-aggregate matrix.
inline CTreeReport in_ctree(const ConjunctiveQuery& query, const Schema& schema) {
    ConjunctiveQuery q = query.nam();
    std::set<std::string> relations;
    for (const auto& atom : q.atoms)
        if (!relations.insert(atom.relation).second)
            return {false, "repeated relation symbol " + atom.relation};
    JoinGraph g = join_graph(q, schema);
    if (!g.self_loops.empty())
        return {false, "self-loop at atom " + std::to_string(*g.self_loops.begin() + 1)};
    // Forest check on the underlying undirected multigraph.
    std::set<std::pair<std::size_t, std::size_t>> undirected;
    for (auto [a, b] : g.arcs) {
        if (g.arcs.count({b, a}))
            return {false, "atoms " + std::to_string(std::min(a, b) + 1) + " and " +
                               std::to_string(std::max(a, b) + 1) + " join in both directions"};
        undirected.insert({std::min(a, b), std::max(a, b)});
    }
    std::vector<std::size_t> parent(q.atoms.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [a, b] : undirected) {
        std::size_t ra = find(a), rb = find(b);
        if (ra == rb) return {false, "join graph has a cycle"};
        parent[ra] = rb;
    }
    // Full non-key-to-key joins.
    for (std::size_t i = 0; i < q.atoms.size(); ++i) {
        const RelationSchema& ri = schema.at(q.atoms[i].relation);
        auto keys_i = ri.key_positions();
        std::set<std::string> nonkey_vars;
        for (std::size_t p = 0; p < q.atoms[i].args.size(); ++p)
            if (is_var(q.atoms[i].args[p]) &&
                std::find(keys_i.begin(), keys_i.end(), p) == keys_i.end())
                nonkey_vars.insert(var_name(q.atoms[i].args[p]));
        for (std::size_t j = 0; j < q.atoms.size(); ++j) {
            if (i == j) continue;
            const RelationSchema& rj = schema.at(q.atoms[j].relation);
            auto keys_j = rj.key_positions();
            bool joins_key = false;
            bool whole_key = true;
            for (auto kp : keys_j) {
                const Term& t = q.atoms[j].args[kp];
                bool covered = is_var(t) && nonkey_vars.count(var_name(t));
                joins_key = joins_key || covered;
                whole_key = whole_key && covered;
            }
            if (joins_key && !whole_key)
                return {false, "non-key-to-key join from atom " + std::to_string(i + 1) +
                                   " to atom " + std::to_string(j + 1) +
                                   " does not cover the whole key"};
        }
    }
    return {true, ""};
}

// ---------------------------------------------------------------------------
// One-atom denials: the key-repair reduction
// ---------------------------------------------------------------------------

/// Per-key candidate list: the tuple itself when consistent, otherwise all
/// of its minimum-cost replacements. Bags with no candidates witness that no
/// fix exists.
struct Bag {
    std::size_t owner_tid = 0;
    std::string relation;
    std::vector<Value> key;
    std::vector<Tuple> candidates;
    bool was_consistent = false;
};

/// The reduced instance: consistent tuples plus all minimal per-tuple fixes,
/// grouped per original key. Choosing one candidate per bag is exactly
/// choosing a least-squares fix.
struct KeyRepairInstance {
    std::vector<Bag> bags;  // relation declaration order, keys ascending

    bool feasible() const {
        for (const auto& b : bags)
            if (b.candidates.empty()) return false;
        return true;
    }
};

inline bool is_one_atom(const std::vector<DenialConstraint>& ics) {
    for (const auto& dc : ics)
        if (!dc.one_atom()) return false;
    return true;
}

inline KeyRepairInstance reduce_1ad(const Instance& db, const std::vector<DenialConstraint>& ics,
                                    const FixSearchConfig& cfg = {}) {
    for (const auto& dc : ics)
        if (!dc.one_atom())
            throw UnsupportedConstraint(dc.label + ": the reduction requires one-atom denials");
    KeyRepairInstance out;
    std::size_t n = db.tuple_count();
    for (std::size_t tid = 0; tid < n; ++tid) {
        const Tuple& t = db.tuple(tid);
        const RelationSchema& rs = db.schema().at(t.relation);
        std::vector<const DenialConstraint*> relevant;
        for (const auto& dc : ics)
            if (dc.atoms.front().relation == t.relation) relevant.push_back(&dc);
        auto tuple_ok = [&](const Tuple& candidate) {
            for (const auto* dc : relevant)
                if (!detail::denial_satisfied_over({&candidate}, *dc, cfg.assignment_budget))
                    return false;
            return true;
        };
        Bag bag;
        bag.owner_tid = tid;
        bag.relation = t.relation;
        bag.key = key_of(t, rs);
        if (tuple_ok(t)) {
            bag.was_consistent = true;
            bag.candidates.push_back(t);
        } else {
            // Minimum-cost satisfying candidates over the border grid; ties
            // all kept, ordered by value vector.
            std::vector<std::size_t> cells = rs.fixable_positions();
            std::vector<std::vector<std::int64_t>> candidates;
            for (auto p : cells) {
                auto values =
                    detail::grid_values(db, ics, t.relation, p, cfg.window_radius_override);
                values.push_back(as_int(t.values[p]));
                std::sort(values.begin(), values.end());
                values.erase(std::unique(values.begin(), values.end()), values.end());
                candidates.push_back(std::move(values));
            }
            std::optional<Rational> best;
            std::vector<std::size_t> index(cells.size(), 0);
            if (!cells.empty()) {
                while (true) {
                    Tuple fixed = t;
                    for (std::size_t i = 0; i < cells.size(); ++i)
                        fixed.values[cells[i]] = Value(candidates[i][index[i]]);
                    if (tuple_ok(fixed)) {
                        Rational cost = tuple_distance(t, fixed, rs);
                        if (!best || cost < *best) {
                            best = cost;
                            bag.candidates.clear();
                        }
                        if (cost == *best) bag.candidates.push_back(fixed);
                    }
                    std::size_t i = 0;
                    for (; i < cells.size(); ++i) {
                        if (++index[i] < candidates[i].size()) break;
                        index[i] = 0;
                    }
                    if (i == cells.size()) break;
                }
            }
            std::sort(bag.candidates.begin(), bag.candidates.end(),
                      [](const Tuple& a, const Tuple& b) { return values_less(a.values, b.values); });
        }
        out.bags.push_back(std::move(bag));
    }
    std::stable_sort(out.bags.begin(), out.bags.end(), [&](const Bag& a, const Bag& b) {
        if (a.relation != b.relation) {
            // relation declaration order
            for (const auto& rs : db.schema().relations) {
                if (rs.name == a.relation) return true;
                if (rs.name == b.relation) return false;
            }
        }
        return values_less(a.key, b.key);
    });
    return out;
}

/// All least-squares fixes of a one-atom-denial problem: the cartesian
/// product of the per-bag candidate choices.
inline std::vector<Instance> enumerate_fixes_1ad(const Instance& db,
                                                 const std::vector<DenialConstraint>& ics,
                                                 const FixSearchConfig& cfg = {}) {
    KeyRepairInstance reduced = reduce_1ad(db, ics, cfg);
    if (!reduced.feasible()) return {};
    std::size_t product = 1;
    for (const auto& bag : reduced.bags) {
        product *= bag.candidates.size();
        if (product > cfg.max_grid_points)
            throw CapExceeded("fix enumeration exceeds the configured budget");
    }
    std::vector<Instance> fixes;
    std::vector<std::size_t> index(reduced.bags.size(), 0);
    while (true) {
        Instance fix = db;
        for (std::size_t b = 0; b < reduced.bags.size(); ++b)
            fix = fix.with_replaced(reduced.bags[b].owner_tid,
                                    reduced.bags[b].candidates[index[b]]);
        fixes.push_back(std::move(fix));
        std::size_t b = 0;
        for (; b < reduced.bags.size(); ++b) {
            if (++index[b] < reduced.bags[b].candidates.size()) break;
            index[b] = 0;
        }
        if (b == reduced.bags.size()) break;
    }
    return fixes;
}

// ---------------------------------------------------------------------------
// Consistent query answering
// ---------------------------------------------------------------------------

enum class Semantics { Skeptical, Brave, Majority, Range };

inline std::string semantics_str(Semantics s) {
    switch (s) {
        case Semantics::Skeptical: return "skeptical";
        case Semantics::Brave: return "brave";
        case Semantics::Majority: return "majority";
        case Semantics::Range: return "range";
    }
    return "?";
}

enum class FixMethod { Exact, OneAtom };

inline std::vector<Instance> enumerate_fixes(const Instance& db,
                                             const std::vector<DenialConstraint>& ics,
                                             FixMethod method, const FixSearchConfig& cfg) {
    if (method == FixMethod::OneAtom) return enumerate_fixes_1ad(db, ics, cfg);
    return ls_fixes(db, ics, cfg).fixes;
}

struct CQAResult {
    Semantics semantics = Semantics::Skeptical;
    std::size_t fix_count = 0;
    AnswerSet answers;                                   // skeptical/brave/majority
    std::optional<std::pair<Rational, Rational>> range;  // (glb, lub)
};

/// Consistent answers across all least-squares fixes. Ground queries follow
/// the yes/no convention; with no fixes at all, skeptical is vacuously yes
/// and brave/majority are no (non-ground answer sets come out empty either
/// way, flagged by fix_count = 0).
inline CQAResult cqa(const ConjunctiveQuery& q, const Instance& db,
                     const std::vector<DenialConstraint>& ics, Semantics semantics,
                     const FixSearchConfig& cfg = {}, FixMethod method = FixMethod::Exact) {
    if (semantics == Semantics::Range)
        throw ModelError("use cqa_range for the range semantics");
    std::vector<Instance> fixes = enumerate_fixes(db, ics, method, cfg);
    CQAResult result;
    result.semantics = semantics;
    result.fix_count = fixes.size();
    std::size_t n = fixes.size();
    if (q.ground()) {
        std::size_t sat = 0;
        for (const auto& fix : fixes)
            if (eval_conjunctive(q, fix, cfg.assignment_budget).boolean_value) ++sat;
        result.answers.is_boolean = true;
        switch (semantics) {
            case Semantics::Skeptical: result.answers.boolean_value = sat == n; break;
            case Semantics::Brave: result.answers.boolean_value = sat > 0; break;
            case Semantics::Majority: result.answers.boolean_value = 2 * sat > n; break;
            case Semantics::Range: break;
        }
        return result;
    }
    std::map<AnswerRow, std::size_t> counts;
    for (const auto& fix : fixes) {
        AnswerSet answers = q.aggregate ? eval_aggregate(q, fix, cfg.assignment_budget)
                                        : eval_conjunctive(q, fix, cfg.assignment_budget);
        for (const auto& row : answers.rows) ++counts[row];
    }
    for (const auto& [row, count] : counts) {
        bool keep = false;
        switch (semantics) {
            case Semantics::Skeptical: keep = n > 0 && count == n; break;
            case Semantics::Brave: keep = count > 0; break;
            case Semantics::Majority: keep = 2 * count > n; break;
            case Semantics::Range: break;
        }
        if (keep) result.answers.rows.push_back(row);
    }
    return result;
}

inline CQAResult cqa(const ConjunctiveQuery& q, const Instance& db, const ConstraintSet& ics,
                     Semantics semantics, const FixSearchConfig& cfg = {},
                     FixMethod method = FixMethod::Exact) {
    if (ics.has_aggregation())
        throw UnsupportedConstraint("fix search under aggregation constraints is undecidable");
    std::vector<DenialConstraint> denials;
    for (const auto* d : ics.denials()) denials.push_back(*d);
    return cqa(q, db, denials, semantics, cfg, method);
}

/// Range semantics for scalar aggregate queries: the infimum and supremum
/// of the aggregate across all fixes. Grouped aggregates are rejected, and
/// at least one fix must exist.
inline std::pair<Rational, Rational> cqa_range(const ConjunctiveQuery& q, const Instance& db,
                                               const std::vector<DenialConstraint>& ics,
                                               const FixSearchConfig& cfg = {},
                                               FixMethod method = FixMethod::Exact) {
    if (!q.aggregate || !q.scalar())
        throw ModelError("range semantics is defined for scalar aggregate queries");
    std::vector<Instance> fixes = enumerate_fixes(db, ics, method, cfg);
    if (fixes.empty()) throw ModelError("range semantics needs at least one fix");
    std::optional<Rational> glb, lub;
    for (const auto& fix : fixes) {
        AnswerSet answers = eval_aggregate(q, fix, cfg.assignment_budget);
        if (answers.rows.empty()) continue;  // undefined avg in this fix
        const Rational& v = *answers.rows.front().aggregate;
        if (!glb || v < *glb) glb = v;
        if (!lub || v > *lub) lub = v;
    }
    if (!glb) throw ModelError("the aggregate is undefined in every fix");
    return {*glb, *lub};
}

}  // namespace lsfix
