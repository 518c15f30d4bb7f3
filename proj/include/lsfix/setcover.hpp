#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"
#include "lsfix/repair.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// The weighted set cover instance derived from a repair problem
// ---------------------------------------------------------------------------

/// One coverable set: the violation sets resolved by one local fix of one
/// tuple. Weight equals the fix cost.
struct CoverSet {
    std::size_t id = 0;          // dense, assigned in tuple order then fix order
    std::size_t owner_tid = 0;   // the tuple this set repairs
    LocalFix fix;                // canonical minimum-cost representative
    std::vector<std::size_t> members;  // hyperedge indices, sorted
    Rational weight;
};

/// (U, S, w): U are the hyperedges of the conflict hypergraph, S one set per
/// local fix, w the fix costs. Feasible for local constraint sets.
struct CoverInstance {
    ConflictHypergraph graph;  // elements = graph.edges, by index
    std::vector<CoverSet> sets;

    std::size_t element_count() const { return graph.edges.size(); }

    /// Max number of sets any single element occurs in.
    std::size_t max_frequency() const {
        std::size_t best = 0;
        for (std::size_t e = 0; e < element_count(); ++e) {
            std::size_t freq = 0;
            for (const auto& s : sets)
                if (std::binary_search(s.members.begin(), s.members.end(), e)) ++freq;
            best = std::max(best, freq);
        }
        return best;
    }

    bool feasible() const {
        std::set<std::size_t> covered;
        for (const auto& s : sets) covered.insert(s.members.begin(), s.members.end());
        return covered.size() == element_count();
    }
};

struct CoverStep {
    std::size_t step = 0;
    std::size_t chosen = 0;
    Rational ratio;  // greedy contribution ratio or primal-dual raise
};

struct Cover {
    std::vector<std::size_t> chosen;  // set ids, sorted
    Rational weight;
    std::vector<CoverStep> trace;
};

inline Cover make_cover(std::vector<std::size_t> chosen, const CoverInstance& ci,
                        std::vector<CoverStep> trace = {}) {
    std::sort(chosen.begin(), chosen.end());
    Rational w(0);
    for (auto id : chosen) w += ci.sets[id].weight;
    return Cover{std::move(chosen), w, std::move(trace)};
}

inline bool covers_all(const std::vector<std::size_t>& chosen, const CoverInstance& ci) {
    std::set<std::size_t> covered;
    for (auto id : chosen)
        covered.insert(ci.sets[id].members.begin(), ci.sets[id].members.end());
    return covered.size() == ci.element_count();
}

// ---------------------------------------------------------------------------
// Building the instance
// ---------------------------------------------------------------------------

/// Derives the weighted set cover instance of a repair problem: elements are
/// the conflict hyperedges, one set per local fix of each inconsistent
/// tuple. Requires a local constraint set.
inline CoverInstance build_mwscp(const Instance& db, const std::vector<DenialConstraint>& ics,
                                 std::size_t budget = kDefaultAssignmentCap) {
    LocalityReport locality = is_local(ics, db.schema());
    if (!locality.local) {
        std::string why = "constraint set is not local";
        for (const auto& d : locality.diagnostics) why += "; " + d;
        throw UnsupportedConstraint(why);
    }
    CoverInstance ci;
    ci.graph = conflict_hypergraph(db, ics, budget);
    std::size_t n = db.tuple_count();
    for (std::size_t tid = 0; tid < n; ++tid) {
        // One set per local fix. Tied minima of one resolved set become
        // interchangeable sets with equal members and weight, so that every
        // least-squares fix is reachable from some optimal cover.
        for (const auto& fix : local_fixes(db, ics, tid, ci.graph)) {
            CoverSet s;
            s.id = ci.sets.size();
            s.owner_tid = tid;
            s.fix = fix;
            s.members.assign(fix.resolved.begin(), fix.resolved.end());
            s.weight = fix.cost;
            ci.sets.push_back(std::move(s));
        }
    }
    return ci;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

/// Chvatal's greedy: repeatedly take the set with the best
/// (newly covered)/weight ratio; ties go to the smallest set id. Weight is
/// within (1 + ln N) of the optimum, N the element count.
inline Cover greedy_cover(const CoverInstance& ci) {
    if (!ci.feasible()) throw ModelError("infeasible cover instance");
    std::set<std::size_t> uncovered;
    for (std::size_t e = 0; e < ci.element_count(); ++e) uncovered.insert(e);
    std::vector<std::size_t> chosen;
    std::vector<CoverStep> trace;
    std::size_t step = 0;
    while (!uncovered.empty()) {
        std::optional<std::size_t> best;
        Rational best_ratio(0);
        for (const auto& s : ci.sets) {
            if (std::find(chosen.begin(), chosen.end(), s.id) != chosen.end()) continue;
            std::size_t gain = 0;
            for (auto e : s.members) gain += uncovered.count(e);
            if (gain == 0) continue;
            Rational ratio = Rational(static_cast<std::int64_t>(gain)) / s.weight;
            if (!best || ratio > best_ratio) {
                best = s.id;
                best_ratio = ratio;
            }
        }
        if (!best) throw ModelError("infeasible cover instance");
        chosen.push_back(*best);
        for (auto e : ci.sets[*best].members) uncovered.erase(e);
        trace.push_back({step++, *best, best_ratio});
    }
    return make_cover(std::move(chosen), ci, std::move(trace));
}

/// Primal-dual (Bar-Yehuda/Even style): raise the dual of each uncovered
/// element until a set goes tight, then take every tight set. The resulting
/// weight is within f times the optimum, f the maximum element frequency.
inline Cover primal_dual_cover(const CoverInstance& ci) {
    if (!ci.feasible()) throw ModelError("infeasible cover instance");
    std::vector<Rational> slack;
    for (const auto& s : ci.sets) slack.push_back(s.weight);
    std::vector<bool> taken(ci.sets.size(), false);
    std::set<std::size_t> covered;
    std::vector<std::size_t> chosen;
    std::vector<CoverStep> trace;
    std::size_t step = 0;
    for (std::size_t e = 0; e < ci.element_count(); ++e) {
        if (covered.count(e)) continue;
        std::optional<Rational> raise;
        for (const auto& s : ci.sets)
            if (!taken[s.id] && std::binary_search(s.members.begin(), s.members.end(), e))
                if (!raise || slack[s.id] < *raise) raise = slack[s.id];
        if (!raise) throw ModelError("infeasible cover instance");
        for (const auto& s : ci.sets) {
            if (taken[s.id] || !std::binary_search(s.members.begin(), s.members.end(), e)) continue;
            slack[s.id] -= *raise;
            if (slack[s.id].is_zero()) {
                taken[s.id] = true;
                chosen.push_back(s.id);
                covered.insert(s.members.begin(), s.members.end());
                trace.push_back({step++, s.id, *raise});
            }
        }
    }
    return make_cover(std::move(chosen), ci, std::move(trace));
}

// ---------------------------------------------------------------------------
// Exact cover (oracle-grade, exponential)
// ---------------------------------------------------------------------------

namespace detail {

/// Branches on the lowest-id uncovered element, collecting every cover
/// whose weight matches the incumbent optimum. Set weights are positive, so
/// optimal covers carry no redundant sets and the enumeration stays small.
struct ExactCoverSearch {
    const CoverInstance& ci;
    std::optional<Rational> best_weight;
    std::set<std::vector<std::size_t>> optimal;

    void run() {
        std::vector<std::size_t> chosen;
        descend(chosen, Rational(0), std::set<std::size_t>());
    }

    void descend(std::vector<std::size_t>& chosen, Rational weight,
                 const std::set<std::size_t>& covered) {
        if (best_weight && weight > *best_weight) return;
        std::optional<std::size_t> pivot;
        for (std::size_t e = 0; e < ci.element_count(); ++e)
            if (!covered.count(e)) {
                pivot = e;
                break;
            }
        if (!pivot) {
            std::vector<std::size_t> sorted(chosen);
            std::sort(sorted.begin(), sorted.end());
            if (!best_weight || weight < *best_weight) {
                best_weight = weight;
                optimal.clear();
            }
            if (weight == *best_weight) optimal.insert(std::move(sorted));
            return;
        }
        for (const auto& s : ci.sets) {
            if (!std::binary_search(s.members.begin(), s.members.end(), *pivot)) continue;
            if (std::find(chosen.begin(), chosen.end(), s.id) != chosen.end()) continue;
            std::set<std::size_t> next_covered = covered;
            next_covered.insert(s.members.begin(), s.members.end());
            chosen.push_back(s.id);
            descend(chosen, weight + s.weight, next_covered);
            chosen.pop_back();
        }
    }
};

}  // namespace detail

inline constexpr std::size_t kDefaultExactCoverCap = 20;

/// Minimum-weight cover by exhaustive branching; ties broken by the
/// lexicographically smallest chosen-id vector.
inline Cover exact_cover(const CoverInstance& ci, std::size_t max_sets = kDefaultExactCoverCap) {
    if (ci.sets.size() > max_sets)
        throw CapExceeded("exact cover cap exceeded: " + std::to_string(ci.sets.size()) + " sets");
    if (!ci.feasible()) throw ModelError("infeasible cover instance");
    detail::ExactCoverSearch search{ci, {}, {}};
    search.run();
    if (search.optimal.empty()) throw ModelError("infeasible cover instance");
    return make_cover(*search.optimal.begin(), ci);
}

/// Every optimal cover (as sorted id vectors), for cross-checking the
/// fix/cover correspondence.
inline std::vector<Cover> all_optimal_covers(const CoverInstance& ci,
                                             std::size_t max_sets = kDefaultExactCoverCap) {
    if (ci.sets.size() > max_sets)
        throw CapExceeded("exact cover cap exceeded: " + std::to_string(ci.sets.size()) + " sets");
    if (!ci.feasible()) throw ModelError("infeasible cover instance");
    detail::ExactCoverSearch search{ci, {}, {}};
    search.run();
    std::vector<Cover> out;
    for (const auto& chosen : search.optimal) out.push_back(make_cover(chosen, ci));
    return out;
}

// ---------------------------------------------------------------------------
// From covers back to databases
// ---------------------------------------------------------------------------

/// Replaces multiple chosen sets of one tuple by the single set resolving
/// their union, so that each tuple keeps exactly one replacement.
/// Idempotent; reuses the existing set with the combined membership.
inline Cover star_normalize(const Cover& cover, const CoverInstance& ci, const Instance& db,
                            const std::vector<DenialConstraint>& ics) {
    std::map<std::size_t, std::vector<std::size_t>> by_owner;
    for (auto id : cover.chosen) by_owner[ci.sets[id].owner_tid].push_back(id);
    std::vector<std::size_t> chosen;
    for (const auto& [tid, ids] : by_owner) {
        if (ids.size() == 1) {
            chosen.push_back(ids.front());
            continue;
        }
        std::vector<LocalFix> parts;
        for (auto id : ids) parts.push_back(ci.sets[id].fix);
        LocalFix combined = combine_local_fixes(db, ics, parts, ci.graph);
        std::optional<std::size_t> existing;
        for (const auto& s : ci.sets) {
            if (s.owner_tid != tid) continue;
            if (std::set<std::size_t>(s.members.begin(), s.members.end()) == combined.resolved) {
                existing = s.id;
                break;
            }
        }
        if (!existing)
            throw UnsupportedConstraint(
                "combined local fix is missing from the cover instance; constraint set is not local");
        chosen.push_back(*existing);
    }
    return make_cover(std::move(chosen), ci);
}

/// Applies a star-normalized cover: each covered tuple is replaced by its
/// set's local fix. The result satisfies the constraints and its distance
/// from the original equals the cover weight.
inline Instance apply_cover(const Instance& db, const Cover& cover, const CoverInstance& ci) {
    std::set<std::size_t> owners;
    for (auto id : cover.chosen)
        if (!owners.insert(ci.sets[id].owner_tid).second)
            throw ModelError("cover is not star-normalized: two sets repair one tuple");
    Instance out = db;
    for (auto id : cover.chosen) {
        const CoverSet& s = ci.sets[id];
        out = out.with_replaced(s.owner_tid, s.fix.fixed);
    }
    return out;
}

}  // namespace lsfix
