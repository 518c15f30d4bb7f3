#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsfix/ast.hpp"
#include "lsfix/cqa.hpp"
#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"
#include "lsfix/repair.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// Weighted one-hot equation systems over GF(2)
// ---------------------------------------------------------------------------

/// One weighted product equation: it is satisfied by a one-hot assignment
/// iff every required bag selects the required candidate. Under the one-hot
/// restriction the (1 - X) factors of the non-selected variables are implied
/// by the requirements, so only the requirement map is stored.
struct GF2Equation {
    std::map<std::size_t, std::size_t> requirements;  // bag index -> candidate index
    std::int64_t weight = 0;
};

/// The reduced aggregate-range problem: per-tuple candidate bags plus one
/// merged equation per satisfying combination of candidates. `m` is the
/// query's atom count and `k` the largest bag, which bound the
/// approximation guarantee k^-m.
struct GF2System {
    std::vector<Bag> bags;
    std::vector<GF2Equation> equations;
    std::size_t m = 0;
    std::size_t k = 1;
};

/// Exactly one selected candidate per bag, in bag order.
struct OneHotAssignment {
    std::vector<std::size_t> selection;
};

/// Builds the equation system for a scalar sum query under one-atom
/// denials: bags come from the key-repair reduction; every assignment of
/// query atoms to candidates that satisfies the body and is one-hot
/// consistent contributes its z-value as an equation weight. Equations with
/// identical requirements are merged by summing weights.
inline GF2System build_rwae2(const ConjunctiveQuery& q, const Instance& db,
                             const std::vector<DenialConstraint>& ics,
                             const FixSearchConfig& cfg = {}) {
    if (!q.aggregate || q.aggregate->func != AggFunc::Sum || !q.scalar())
        throw ModelError("the reduction handles scalar sum queries");
    KeyRepairInstance reduced = reduce_1ad(db, ics, cfg);
    if (!reduced.feasible())
        throw ModelError("no fix exists: some tuple has no consistent replacement");

    GF2System sys;
    sys.bags = reduced.bags;
    sys.m = q.atoms.size();
    for (const auto& bag : sys.bags) sys.k = std::max(sys.k, bag.candidates.size());

    // One synthetic tuple id per candidate so the body matcher can report
    // which (bag, candidate) pairs an assignment used.
    std::vector<std::pair<std::size_t, std::size_t>> by_global;  // -> (bag, candidate)
    std::vector<const Tuple*> universe_tuples;
    for (std::size_t b = 0; b < sys.bags.size(); ++b)
        for (std::size_t c = 0; c < sys.bags[b].candidates.size(); ++c) {
            by_global.emplace_back(b, c);
            universe_tuples.push_back(&sys.bags[b].candidates[c]);
        }

    detail::TupleUniverse universe = detail::TupleUniverse::of_tuples(universe_tuples);
    detail::BodyMatcher matcher(universe, q.atoms, q.comparisons, cfg.assignment_budget);
    std::map<std::map<std::size_t, std::size_t>, std::int64_t> merged;
    matcher.run([&](const std::vector<std::size_t>& atom_tids, const detail::Env& env) {
        std::map<std::size_t, std::size_t> requirements;
        for (std::size_t gid : atom_tids) {
            auto [bag, cand] = by_global[gid];
            auto [it, inserted] = requirements.emplace(bag, cand);
            if (!inserted && it->second != cand) return true;  // one-hot unsatisfiable, drop
        }
        const Value& z = env.at(q.aggregate->var);
        if (as_int(z) < 0)
            throw ModelError("negative aggregation value; the guarantee needs a nonnegative attribute");
        merged[requirements] += as_int(z);
        return true;
    });
    for (auto& [req, weight] : merged) sys.equations.push_back({req, weight});
    return sys;
}

// ---------------------------------------------------------------------------
// Expectation, derandomization and the guarantee
// ---------------------------------------------------------------------------

/// Satisfied weight of a full assignment.
inline std::int64_t satisfied_weight(const GF2System& sys, const OneHotAssignment& assignment) {
    std::int64_t total = 0;
    for (const auto& eq : sys.equations) {
        bool ok = true;
        for (const auto& [bag, cand] : eq.requirements)
            if (assignment.selection[bag] != cand) {
                ok = false;
                break;
            }
        if (ok) total += eq.weight;
    }
    return total;
}

/// Expected satisfied weight when the bags up to `partial.size()` are fixed
/// and every remaining bag picks uniformly among its candidates: each
/// undecided requirement contributes a factor 1/|bag|.
inline Rational expected_weight(const GF2System& sys, const std::vector<std::size_t>& partial) {
    Rational total(0);
    for (const auto& eq : sys.equations) {
        Rational p(1);
        for (const auto& [bag, cand] : eq.requirements) {
            if (bag < partial.size()) {
                if (partial[bag] != cand) {
                    p = Rational(0);
                    break;
                }
            } else {
                p /= Rational(static_cast<std::int64_t>(sys.bags[bag].candidates.size()));
            }
        }
        total += Rational(eq.weight) * p;
    }
    return total;
}

struct DerandomizedResult {
    OneHotAssignment assignment;
    std::int64_t weight = 0;
};

/// Conditional-expectation derandomization: bags are decided in canonical
/// order, each time choosing the candidate that maximizes the conditional
/// expected weight (lowest index on ties). The expectation never decreases
/// along the way, so the final weight is at least the a-priori expectation.
inline DerandomizedResult derandomize(const GF2System& sys) {
    std::vector<std::size_t> partial;
    for (std::size_t b = 0; b < sys.bags.size(); ++b) {
        std::size_t best_c = 0;
        Rational best_e(0);
        for (std::size_t c = 0; c < sys.bags[b].candidates.size(); ++c) {
            partial.push_back(c);
            Rational e = expected_weight(sys, partial);
            partial.pop_back();
            if (c == 0 || e > best_e) {
                best_c = c;
                best_e = e;
            }
        }
        partial.push_back(best_c);
    }
    OneHotAssignment assignment{partial};
    return {assignment, satisfied_weight(sys, assignment)};
}

/// The instance selected by a one-hot assignment; an LS-fix whenever the
/// bags hold the per-tuple minima.
inline Instance assignment_to_fix(const Instance& db, const GF2System& sys,
                                  const OneHotAssignment& assignment) {
    Instance out = db;
    for (std::size_t b = 0; b < sys.bags.size(); ++b)
        out = out.with_replaced(sys.bags[b].owner_tid,
                                sys.bags[b].candidates[assignment.selection[b]]);
    return out;
}

/// Approximation factor k^-m, k the largest bag size, m the atom count.
inline Rational guarantee(const GF2System& sys) {
    Rational factor(1);
    Rational inv(1, static_cast<std::int64_t>(sys.k));
    for (std::size_t i = 0; i < sys.m; ++i) factor *= inv;
    return factor;
}

}  // namespace lsfix
