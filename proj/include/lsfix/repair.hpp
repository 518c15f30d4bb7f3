#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsfix/ast.hpp"
#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"

namespace lsfix {

inline constexpr std::size_t kDefaultAssignmentCap = 1'000'000;

// ---------------------------------------------------------------------------
// Body matching
// ---------------------------------------------------------------------------

namespace detail {

/// The tuples a body may range over: per relation, (tuple id, tuple) pairs.
/// Built either from a full instance or from a handful of tuples when
/// checking a single violation set.
struct TupleUniverse {
    std::map<std::string, std::vector<std::pair<std::size_t, const Tuple*>>> by_relation;

    static TupleUniverse of(const Instance& db) {
        TupleUniverse u;
        std::size_t tid = 0;
        for (const auto& rs : db.schema().relations)
            for (const auto& t : db.rows(rs.name)) u.by_relation[rs.name].push_back({tid++, &t});
        return u;
    }
    static TupleUniverse of_tuples(const std::vector<const Tuple*>& tuples) {
        TupleUniverse u;
        for (std::size_t i = 0; i < tuples.size(); ++i)
            u.by_relation[tuples[i]->relation].push_back({i, tuples[i]});
        return u;
    }
};

using Env = std::map<std::string, Value>;

inline bool eval_comparison(const Comparison& c, const Env& env) {
    auto value_of = [&](const Term& t) -> const Value& {
        if (is_var(t)) return env.at(var_name(t));
        return const_value(t);
    };
    return compare_values(value_of(c.lhs), c.op, value_of(c.rhs));
}

inline bool comparison_ready(const Comparison& c, const Env& env) {
    for (const Term* t : {&c.lhs, &c.rhs})
        if (is_var(*t) && !env.count(var_name(*t))) return false;
    return true;
}

/// Enumerates every assignment of body atoms to universe tuples that
/// satisfies the comparisons. `on_match` receives the per-atom tuple ids and
/// the variable bindings; returning false stops the enumeration. Comparisons
/// are applied as soon as their variables are bound. The visit budget guards
/// against runaway joins; each attempted atom/tuple pairing costs one unit.
class BodyMatcher {
public:
    BodyMatcher(const TupleUniverse& universe, const std::vector<Atom>& atoms,
                const std::vector<Comparison>& comparisons, std::size_t budget)
        : universe_(universe), atoms_(atoms), comparisons_(comparisons), budget_(budget) {}

    using MatchFn = std::function<bool(const std::vector<std::size_t>&, const Env&)>;

    /// Returns false iff the enumeration was stopped by the callback.
    bool run(const MatchFn& on_match) {
        on_match_ = &on_match;
        chosen_.assign(atoms_.size(), 0);
        Env env;
        for (const auto& c : comparisons_)
            if (comparison_ready(c, env) && !eval_comparison(c, env)) return true;
        return descend(0, env);
    }

private:
    bool descend(std::size_t depth, Env& env) {
        if (depth == atoms_.size()) return (*on_match_)(chosen_, env);
        const Atom& atom = atoms_[depth];
        auto it = universe_.by_relation.find(atom.relation);
        if (it == universe_.by_relation.end()) return true;
        for (const auto& [tid, tuple] : it->second) {
            if (budget_ == 0) throw CapExceeded("assignment enumeration cap exceeded");
            --budget_;
            Env saved = env;
            if (!bind_atom(atom, *tuple, env)) {
                env = std::move(saved);
                continue;
            }
            bool ok = true;
            for (const auto& c : comparisons_) {
                if (comparison_ready(c, saved)) continue;  // checked earlier
                if (comparison_ready(c, env) && !eval_comparison(c, env)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                chosen_[depth] = tid;
                if (!descend(depth + 1, env)) return false;
            }
            env = std::move(saved);
        }
        return true;
    }

    static bool bind_atom(const Atom& atom, const Tuple& tuple, Env& env) {
        if (tuple.values.size() != atom.args.size()) return false;
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            const Term& term = atom.args[i];
            const Value& v = tuple.values[i];
            if (is_var(term)) {
                auto [it, inserted] = env.emplace(var_name(term), v);
                if (!inserted && !(it->second == v)) return false;
            } else if (!(const_value(term) == v)) {
                return false;
            }
        }
        return true;
    }

    const TupleUniverse& universe_;
    const std::vector<Atom>& atoms_;
    const std::vector<Comparison>& comparisons_;
    std::size_t budget_;
    const MatchFn* on_match_ = nullptr;
    std::vector<std::size_t> chosen_;
};

/// True iff the denial holds over exactly the given tuples.
inline bool denial_satisfied_over(const std::vector<const Tuple*>& tuples,
                                  const DenialConstraint& dc,
                                  std::size_t budget = kDefaultAssignmentCap) {
    TupleUniverse u = TupleUniverse::of_tuples(tuples);
    BodyMatcher matcher(u, dc.atoms, dc.comparisons, budget);
    return matcher.run([](const auto&, const auto&) { return false; });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constraint satisfaction
// ---------------------------------------------------------------------------

/// D satisfies a denial iff no assignment makes its body true.
inline bool satisfies(const Instance& db, const DenialConstraint& dc,
                      std::size_t budget = kDefaultAssignmentCap) {
    detail::TupleUniverse u = detail::TupleUniverse::of(db);
    detail::BodyMatcher matcher(u, dc.atoms, dc.comparisons, budget);
    return matcher.run([](const auto&, const auto&) { return false; });
}

inline Rational eval_agg_expr(const AggExpr& e, const Tuple& t, const RelationSchema& rs) {
    switch (e.kind) {
        case AggExpr::Kind::Attr: return Rational(as_int(t.values[*rs.position_of(e.attr)]));
        case AggExpr::Kind::Const: return Rational(e.value);
        case AggExpr::Kind::Add:
            return eval_agg_expr(e.children[0], t, rs) + eval_agg_expr(e.children[1], t, rs);
        case AggExpr::Kind::Sub:
            return eval_agg_expr(e.children[0], t, rs) - eval_agg_expr(e.children[1], t, rs);
        case AggExpr::Kind::Mul:
            return eval_agg_expr(e.children[0], t, rs) * eval_agg_expr(e.children[1], t, rs);
    }
    return Rational(0);
}

/// Aggregate value of one side of an aggregation constraint; nullopt when
/// avg is applied to an empty selection.
inline std::optional<Rational> eval_agg_side(const Instance& db, const AggSide& side) {
    const RelationSchema& rs = db.schema().at(side.relation);
    Rational sum(0);
    std::int64_t count = 0;
    for (const auto& t : db.rows(side.relation)) {
        bool pass = true;
        for (const auto& f : side.filter) {
            if (!compare_values(t.values[*rs.position_of(f.attr)], f.op, f.rhs)) {
                pass = false;
                break;
            }
        }
        if (!pass) continue;
        sum += eval_agg_expr(side.argument, t, rs);
        ++count;
    }
    switch (side.func) {
        case AggFunc::Sum: return sum;
        case AggFunc::Count: return Rational(count);
        case AggFunc::Avg:
            if (count == 0) return std::nullopt;
            return sum / Rational(count);
        case AggFunc::CountDistinct: break;  // not allowed in constraints
    }
    throw ModelError("unsupported aggregate in constraint");
}

/// Aggregation constraints are checked by direct aggregation. An undefined
/// side (avg over an empty selection) cannot witness a violation, so the
/// constraint counts as satisfied.
inline bool satisfies(const Instance& db, const AggregationConstraint& ac) {
    std::optional<Rational> lhs = eval_agg_side(db, ac.left);
    std::optional<Rational> rhs =
        ac.right ? eval_agg_side(db, *ac.right) : std::optional<Rational>(Rational(*ac.bound));
    if (!lhs || !rhs) return true;
    switch (ac.op) {
        case CompareOp::Eq: return *lhs == *rhs;
        case CompareOp::Ne: return *lhs != *rhs;
        case CompareOp::Lt: return *lhs < *rhs;
        case CompareOp::Gt: return *lhs > *rhs;
        case CompareOp::Le: return *lhs <= *rhs;
        case CompareOp::Ge: return *lhs >= *rhs;
    }
    return false;
}

inline bool satisfies(const Instance& db, const Constraint& c,
                      std::size_t budget = kDefaultAssignmentCap) {
    if (const auto* d = std::get_if<DenialConstraint>(&c)) return satisfies(db, *d, budget);
    return satisfies(db, std::get<AggregationConstraint>(c));
}

inline bool satisfies_all(const Instance& db, const ConstraintSet& ics,
                          std::size_t budget = kDefaultAssignmentCap) {
    for (const auto& c : ics.constraints)
        if (!satisfies(db, c, budget)) return false;
    return true;
}

inline bool satisfies_all(const Instance& db, const std::vector<DenialConstraint>& ics,
                          std::size_t budget = kDefaultAssignmentCap) {
    for (const auto& dc : ics)
        if (!satisfies(db, dc, budget)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Violation sets and the conflict hypergraph
// ---------------------------------------------------------------------------

/// An inclusion-minimal set of tuples that jointly falsifies one denial.
/// Tuple ids index the instance's insertion order.
struct ViolationSet {
    std::string constraint;
    std::vector<std::size_t> tuples;  // sorted, unique

    friend bool operator==(const ViolationSet&, const ViolationSet&) = default;
};

/// All inclusion-minimal violation sets of one denial. A tuple set violates
/// the denial iff some satisfying assignment uses only its tuples, so the
/// minimal violation sets are exactly the minimal assignment supports.
inline std::vector<ViolationSet> violation_sets(const Instance& db, const DenialConstraint& dc,
                                                std::size_t budget = kDefaultAssignmentCap) {
    std::set<std::vector<std::size_t>> supports;
    detail::TupleUniverse u = detail::TupleUniverse::of(db);
    detail::BodyMatcher matcher(u, dc.atoms, dc.comparisons, budget);
    matcher.run([&](const std::vector<std::size_t>& tids, const detail::Env&) {
        std::vector<std::size_t> support(tids);
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        supports.insert(std::move(support));
        return true;
    });
    std::vector<ViolationSet> out;
    for (const auto& s : supports) {
        bool minimal = true;
        for (const auto& other : supports) {
            if (other.size() < s.size() &&
                std::includes(s.begin(), s.end(), other.begin(), other.end())) {
                minimal = false;
                break;
            }
        }
        if (minimal) out.push_back({dc.label, s});
    }
    return out;  // std::set iteration keeps this deterministic
}

inline std::vector<ViolationSet> violation_sets(const Instance& db, const Constraint& c,
                                                std::size_t budget = kDefaultAssignmentCap) {
    if (const auto* d = std::get_if<DenialConstraint>(&c)) return violation_sets(db, *d, budget);
    throw UnsupportedConstraint(
        "violation sets are defined for denials only; use satisfies() for aggregation constraints");
}

/// Vertices are all tuples of the instance; hyperedges are the violation
/// sets of every constraint, labelled, so different constraints may
/// contribute hyperedges over the same tuples.
struct ConflictHypergraph {
    std::vector<ViolationSet> edges;

    std::vector<std::size_t> edges_containing(std::size_t tid) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (std::binary_search(edges[i].tuples.begin(), edges[i].tuples.end(), tid))
                out.push_back(i);
        return out;
    }
};

inline ConflictHypergraph conflict_hypergraph(const Instance& db,
                                              const std::vector<DenialConstraint>& ics,
                                              std::size_t budget = kDefaultAssignmentCap) {
    ConflictHypergraph g;
    for (const auto& dc : ics) {
        auto vs = violation_sets(db, dc, budget);
        g.edges.insert(g.edges.end(), vs.begin(), vs.end());
    }
    return g;
}

// ---------------------------------------------------------------------------
// Locality
// ---------------------------------------------------------------------------

struct LocalityReport {
    bool local = true;
    std::vector<std::string> diagnostics;
};

namespace detail {

struct AttrRef {
    std::string relation;
    std::size_t position = 0;
    friend auto operator<=>(const AttrRef&, const AttrRef&) = default;
};

/// Resolves each variable of an explicit-form denial to its unique binding
/// position (explicit forms bind every variable exactly once).
inline std::map<std::string, AttrRef> explicit_bindings(const DenialConstraint& dc) {
    std::map<std::string, AttrRef> out;
    for (const auto& atom : dc.atoms)
        for (std::size_t p = 0; p < atom.args.size(); ++p)
            if (is_var(atom.args[p]))
                out.emplace(var_name(atom.args[p]), AttrRef{atom.relation, p});
    return out;
}

}  // namespace detail

/// Locality of a denial set: (a) joins and attribute equalities touch only
/// rigid attributes, (b) every denial constrains some fixable attribute,
/// (c) after rewriting to strict <,> no fixable attribute is bounded from
/// both sides anywhere in the set. Local sets admit safe per-tuple repairs.
inline LocalityReport is_local(const std::vector<DenialConstraint>& ics, const Schema& schema) {
    LocalityReport report;
    std::map<detail::AttrRef, std::set<CompareOp>> directions;
    for (const auto& raw : ics) {
        DenialConstraint dc = explicit_form(raw);
        auto bindings = detail::explicit_bindings(dc);
        auto fixable_at = [&](const Term& t) {
            if (!is_var(t)) return false;
            auto it = bindings.find(var_name(t));
            if (it == bindings.end()) return false;
            const auto& attr = schema.at(it->second.relation).attributes[it->second.position];
            return attr.fixable();
        };
        bool touches_fixable = false;
        for (const auto& c : dc.comparisons) {
            bool lhs_fix = fixable_at(c.lhs);
            bool rhs_fix = fixable_at(c.rhs);
            if (lhs_fix || rhs_fix) touches_fixable = true;
            if (is_var(c.lhs) && is_var(c.rhs)) {
                if (lhs_fix || rhs_fix) {
                    report.local = false;
                    report.diagnostics.push_back(
                        dc.label + ": join or attribute comparison involves a fixable attribute (" +
                        comparison_str(c) + ")");
                }
                continue;
            }
            // Constant comparison: record squeeze directions of fixable ints.
            const Term& var = is_var(c.lhs) ? c.lhs : c.rhs;
            const Term& konst = is_var(c.lhs) ? c.rhs : c.lhs;
            if (!is_var(var) || !is_int(const_value(konst))) continue;
            if (!fixable_at(var)) continue;
            CompareOp op = c.op;
            if (!is_var(c.lhs)) {  // c OP x  ==  x OP' c
                if (op == CompareOp::Lt) op = CompareOp::Gt;
                else if (op == CompareOp::Gt) op = CompareOp::Lt;
                else if (op == CompareOp::Le) op = CompareOp::Ge;
                else if (op == CompareOp::Ge) op = CompareOp::Le;
            }
            auto binding = bindings.at(var_name(var));
            for (const auto& form : normalized_strict_forms(op, as_int(const_value(konst))))
                directions[binding].insert(form.op);
        }
        if (!touches_fixable) {
            report.local = false;
            report.diagnostics.push_back(dc.label + ": no built-in on a fixable attribute");
        }
    }
    for (const auto& [attr, dirs] : directions) {
        if (dirs.count(CompareOp::Lt) && dirs.count(CompareOp::Gt)) {
            report.local = false;
            report.diagnostics.push_back(attr.relation + " attribute #" +
                                         std::to_string(attr.position + 1) +
                                         " is bounded from both sides across the constraint set");
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Border candidate grid
// ---------------------------------------------------------------------------

namespace detail {

/// Candidate values for a fixable attribute: every constant compared with it
/// anywhere in the constraint set contributes {c-1, c, c+1}. When the
/// attribute takes part in variable-to-variable comparisons the borders and
/// all integer column values are widened by +-(n+1), n the tuple count,
/// which restores completeness for attribute-to-attribute constraints.
inline std::vector<std::int64_t> grid_values(const Instance& db,
                                             const std::vector<DenialConstraint>& ics,
                                             const std::string& relation, std::size_t position,
                                             std::optional<std::int64_t> window_override = {}) {
    std::set<std::int64_t> borders;
    bool in_var_var = false;
    for (const auto& raw : ics) {
        DenialConstraint dc = explicit_form(raw);
        auto bindings = explicit_bindings(dc);
        auto binds_here = [&](const Term& t) {
            if (!is_var(t)) return false;
            auto it = bindings.find(var_name(t));
            return it != bindings.end() && it->second.relation == relation &&
                   it->second.position == position;
        };
        for (const auto& c : dc.comparisons) {
            bool lhs_here = binds_here(c.lhs);
            bool rhs_here = binds_here(c.rhs);
            if (!lhs_here && !rhs_here) continue;
            if (is_var(c.lhs) && is_var(c.rhs)) {
                in_var_var = true;
                continue;
            }
            const Term& konst = is_var(c.lhs) ? c.rhs : c.lhs;
            if (!is_int(const_value(konst))) continue;
            std::int64_t v = as_int(const_value(konst));
            borders.insert(v - 1);
            borders.insert(v);
            borders.insert(v + 1);
        }
    }
    if (in_var_var) {
        std::set<std::int64_t> pool = borders;
        for (const auto& rs : db.schema().relations)
            for (const auto& t : db.rows(rs.name))
                for (std::size_t p = 0; p < t.values.size(); ++p)
                    if (rs.attributes[p].type == AttrType::Int) pool.insert(as_int(t.values[p]));
        std::int64_t window =
            window_override.value_or(static_cast<std::int64_t>(db.tuple_count()) + 1);
        for (std::int64_t base : pool)
            for (std::int64_t d = -window; d <= window; ++d) borders.insert(base + d);
    }
    return {borders.begin(), borders.end()};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Local fixes
// ---------------------------------------------------------------------------

/// A per-tuple repair candidate: `fixed` agrees with `original` outside the
/// fixable attributes, resolves a non-empty set of the hypergraph's edges,
/// and no cheaper tuple resolves the same edge set. `resolved` holds edge
/// indices of the conflict hypergraph it was computed against.
struct LocalFix {
    std::size_t tid = 0;
    Tuple original;
    Tuple fixed;
    std::set<std::size_t> resolved;
    Rational cost;
};

namespace detail {

/// True iff replacing `t` with `candidate` inside the violation set leaves
/// the constraint satisfied on those tuples.
inline bool replacement_resolves(const Instance& db, const ViolationSet& edge,
                                 const DenialConstraint& dc, std::size_t tid,
                                 const Tuple& candidate) {
    std::vector<const Tuple*> tuples;
    for (std::size_t other : edge.tuples)
        if (other != tid) tuples.push_back(&db.tuple(other));
    tuples.push_back(&candidate);
    return denial_satisfied_over(tuples, dc);
}

inline const DenialConstraint& denial_by_label(const std::vector<DenialConstraint>& ics,
                                               const std::string& label) {
    for (const auto& dc : ics)
        if (dc.label == label) return dc;
    throw ModelError("unknown constraint label " + label);
}

/// Enumerates the candidate tuples of `tid` over the border grid and hands
/// each (candidate, resolved edge set) to the sink. Candidates equal to the
/// original tuple or resolving nothing are skipped.
template <typename Sink>
void for_each_candidate(const Instance& db, const std::vector<DenialConstraint>& ics,
                        std::size_t tid, const ConflictHypergraph& graph, Sink&& sink,
                        std::optional<std::int64_t> window_override = {}) {
    const Tuple& original = db.tuple(tid);
    const RelationSchema& rs = db.schema().at(original.relation);
    auto incident = graph.edges_containing(tid);
    if (incident.empty()) return;

    std::vector<std::size_t> cells = rs.fixable_positions();
    std::vector<std::vector<std::int64_t>> candidates;
    for (auto p : cells) {
        auto values = grid_values(db, ics, original.relation, p, window_override);
        values.push_back(as_int(original.values[p]));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        candidates.push_back(std::move(values));
    }

    std::vector<std::size_t> index(cells.size(), 0);
    while (true) {
        Tuple fixed = original;
        bool changed = false;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            fixed.values[cells[i]] = Value(candidates[i][index[i]]);
            changed |= candidates[i][index[i]] != as_int(original.values[cells[i]]);
        }
        if (changed) {
            std::set<std::size_t> resolved;
            for (std::size_t e : incident) {
                const DenialConstraint& dc = denial_by_label(ics, graph.edges[e].constraint);
                if (replacement_resolves(db, graph.edges[e], dc, tid, fixed))
                    resolved.insert(e);
            }
            if (!resolved.empty()) sink(fixed, resolved);
        }
        std::size_t i = 0;
        for (; i < cells.size(); ++i) {
            if (++index[i] < candidates[i].size()) break;
            index[i] = 0;
        }
        if (i == cells.size()) break;
    }
}

}  // namespace detail

/// All local fixes of the tuple `tid`: for every achievable resolved edge
/// set, the minimum-cost candidates (ties retained, lexicographically
/// smallest value vector first). Consistent tuples yield an empty list.
inline std::vector<LocalFix> local_fixes(const Instance& db,
                                         const std::vector<DenialConstraint>& ics, std::size_t tid,
                                         const ConflictHypergraph& graph) {
    const Tuple& original = db.tuple(tid);
    const RelationSchema& rs = db.schema().at(original.relation);
    std::map<std::set<std::size_t>, std::vector<LocalFix>> buckets;
    detail::for_each_candidate(
        db, ics, tid, graph, [&](const Tuple& fixed, const std::set<std::size_t>& resolved) {
            Rational cost = tuple_distance(original, fixed, rs);
            auto& bucket = buckets[resolved];
            if (!bucket.empty() && cost > bucket.front().cost) return;
            if (!bucket.empty() && cost < bucket.front().cost) bucket.clear();
            bucket.push_back({tid, original, fixed, resolved, cost});
        });
    std::vector<LocalFix> out;
    for (auto& [resolved, bucket] : buckets) {
        std::sort(bucket.begin(), bucket.end(), [](const LocalFix& a, const LocalFix& b) {
            return values_less(a.fixed.values, b.fixed.values);
        });
        out.insert(out.end(), bucket.begin(), bucket.end());
    }
    std::sort(out.begin(), out.end(), [](const LocalFix& a, const LocalFix& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return values_less(a.fixed.values, b.fixed.values);
    });
    return out;
}

inline std::vector<LocalFix> local_fixes(const Instance& db,
                                         const std::vector<DenialConstraint>& ics,
                                         std::size_t tid) {
    return local_fixes(db, ics, tid, conflict_hypergraph(db, ics));
}

/// The cheapest candidate whose resolved set covers the union of the given
/// fixes' resolved sets. For local constraint sets such a candidate always
/// exists; failure signals misuse on a non-local set.
inline LocalFix combine_local_fixes(const Instance& db, const std::vector<DenialConstraint>& ics,
                                    const std::vector<LocalFix>& fixes,
                                    const ConflictHypergraph& graph) {
    if (fixes.empty()) throw ModelError("combine_local_fixes: no fixes given");
    std::size_t tid = fixes.front().tid;
    std::set<std::size_t> target;
    for (const auto& f : fixes) {
        if (f.tid != tid) throw ModelError("combine_local_fixes: fixes belong to different tuples");
        target.insert(f.resolved.begin(), f.resolved.end());
    }
    const Tuple& original = db.tuple(tid);
    const RelationSchema& rs = db.schema().at(original.relation);
    std::optional<LocalFix> best;
    detail::for_each_candidate(
        db, ics, tid, graph, [&](const Tuple& fixed, const std::set<std::size_t>& resolved) {
            if (!std::includes(resolved.begin(), resolved.end(), target.begin(), target.end()))
                return;
            Rational cost = tuple_distance(original, fixed, rs);
            if (!best || cost < best->cost ||
                (cost == best->cost && values_less(fixed.values, best->fixed.values)))
                best = LocalFix{tid, original, fixed, resolved, cost};
        });
    if (!best)
        throw UnsupportedConstraint(
            "no single candidate resolves the union of the given fixes; the constraint set is not local");
    return *best;
}

}  // namespace lsfix
