#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsfix/ast.hpp"
#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"
#include "lsfix/repair.hpp"

namespace lsfix {

struct FixSearchConfig {
    std::size_t max_grid_points = 10'000'000;  // search-node budget
    std::optional<std::int64_t> window_radius_override;
    std::size_t assignment_budget = kDefaultAssignmentCap;
};

/// Result of exhaustive fix search: every least-squares fix, their common
/// distance (absent when no fix exists) and the number of explored
/// candidate combinations.
struct FixResult {
    std::vector<Instance> fixes;
    std::optional<Rational> min_distance;
    std::size_t explored = 0;
};

namespace detail {

struct TupleCombo {
    Rational cost;
    std::vector<std::int64_t> values;  // one per fixable cell of the tuple
};

/// Per-tuple precomputed candidate combinations over the border grid,
/// sorted by cost so the search can cut a whole tail once the running
/// distance passes the incumbent minimum.
struct TupleGrid {
    std::size_t tid = 0;
    std::vector<std::size_t> cells;  // fixable positions
    std::vector<TupleCombo> combos;
};

inline std::vector<TupleGrid> build_grids(const Instance& db,
                                          const std::vector<DenialConstraint>& ics,
                                          const FixSearchConfig& cfg) {
    std::vector<TupleGrid> grids;
    std::size_t n = db.tuple_count();
    for (std::size_t tid = 0; tid < n; ++tid) {
        const Tuple& t = db.tuple(tid);
        const RelationSchema& rs = db.schema().at(t.relation);
        TupleGrid grid;
        grid.tid = tid;
        grid.cells = rs.fixable_positions();
        std::vector<std::vector<std::int64_t>> candidates;
        std::size_t combo_count = 1;
        for (auto p : grid.cells) {
            auto values = grid_values(db, ics, t.relation, p, cfg.window_radius_override);
            values.push_back(as_int(t.values[p]));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            combo_count *= values.size();
            if (combo_count > cfg.max_grid_points)
                throw CapExceeded("candidate grid exceeds the configured budget");
            candidates.push_back(std::move(values));
        }
        std::vector<std::size_t> index(grid.cells.size(), 0);
        while (true) {
            TupleCombo combo;
            Rational cost(0);
            for (std::size_t i = 0; i < grid.cells.size(); ++i) {
                std::int64_t v = candidates[i][index[i]];
                combo.values.push_back(v);
                Rational diff(v - as_int(t.values[grid.cells[i]]));
                cost += rs.attributes[grid.cells[i]].weight * diff * diff;
            }
            combo.cost = cost;
            grid.combos.push_back(std::move(combo));
            std::size_t i = 0;
            for (; i < grid.cells.size(); ++i) {
                if (++index[i] < candidates[i].size()) break;
                index[i] = 0;
            }
            if (i == grid.cells.size()) break;
        }
        std::sort(grid.combos.begin(), grid.combos.end(),
                  [](const TupleCombo& a, const TupleCombo& b) {
                      if (a.cost != b.cost) return a.cost < b.cost;
                      return a.values < b.values;
                  });
        grids.push_back(std::move(grid));
    }
    return grids;
}

class FixSearch {
public:
    FixSearch(const Instance& db, const std::vector<DenialConstraint>& ics,
              const FixSearchConfig& cfg)
        : db_(db), ics_(ics), cfg_(cfg), grids_(build_grids(db, ics, cfg)) {
        for (auto* t : db.all_tuples()) working_.push_back(*t);
    }

    FixResult run() {
        descend(0, Rational(0));
        FixResult out;
        out.explored = explored_;
        out.min_distance = best_;
        for (auto& rows : results_) {
            Instance fix(db_.schema());
            for (auto& t : rows) fix.add(t);
            out.fixes.push_back(std::move(fix));
        }
        return out;
    }

private:
    void descend(std::size_t k, Rational cost) {
        if (k == grids_.size()) {
            if (!best_ || cost < *best_) {
                best_ = cost;
                results_.clear();
            }
            if (cost == *best_) results_.push_back(working_);
            return;
        }
        const TupleGrid& grid = grids_[k];
        const Tuple original = working_[grid.tid];
        for (const auto& combo : grid.combos) {
            Rational next = cost + combo.cost;
            if (best_ && next > *best_) break;  // combos sorted by cost
            if (++explored_ > cfg_.max_grid_points)
                throw CapExceeded("fix search exceeded the configured budget");
            for (std::size_t i = 0; i < grid.cells.size(); ++i)
                working_[grid.tid].values[grid.cells[i]] = Value(combo.values[i]);
            if (prefix_consistent(k + 1)) descend(k + 1, next);
        }
        working_[grid.tid] = original;
    }

    /// A violation among the first `k` tuples survives in every completion,
    /// so the branch can be cut as soon as the assigned prefix is
    /// inconsistent.
    bool prefix_consistent(std::size_t k) {
        std::vector<const Tuple*> prefix;
        for (std::size_t i = 0; i < k; ++i) prefix.push_back(&working_[i]);
        for (const auto& dc : ics_)
            if (!denial_satisfied_over(prefix, dc, cfg_.assignment_budget)) return false;
        return true;
    }

    const Instance& db_;
    const std::vector<DenialConstraint>& ics_;
    const FixSearchConfig& cfg_;
    std::vector<TupleGrid> grids_;
    std::vector<Tuple> working_;
    std::optional<Rational> best_;
    std::vector<std::vector<Tuple>> results_;
    std::size_t explored_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Exhaustive least-squares fix search
// ---------------------------------------------------------------------------

/// Enumerates the candidate grid (original values, constraint borders and,
/// for attributes under variable-to-variable comparisons, a +-(n+1) window),
/// keeps the instances satisfying the constraints, and returns all global
/// distance minimizers. Aggregation constraints are rejected: fix existence
/// under them is undecidable, so the search refuses them outright.
inline FixResult ls_fixes(const Instance& db, const std::vector<DenialConstraint>& ics,
                          const FixSearchConfig& cfg = {}) {
    detail::FixSearch search(db, ics, cfg);
    return search.run();
}

inline FixResult ls_fixes(const Instance& db, const ConstraintSet& ics,
                          const FixSearchConfig& cfg = {}) {
    if (ics.has_aggregation())
        throw UnsupportedConstraint("fix search under aggregation constraints is undecidable");
    std::vector<DenialConstraint> denials;
    for (const auto* d : ics.denials()) denials.push_back(*d);
    return ls_fixes(db, denials, cfg);
}

/// Existence of a least-squares fix. Since any fix implies a least-squares
/// fix, this is plain fix existence.
inline bool ne(const Instance& db, const std::vector<DenialConstraint>& ics,
               const FixSearchConfig& cfg = {}) {
    return !ls_fixes(db, ics, cfg).fixes.empty();
}

inline bool ne(const Instance& db, const ConstraintSet& ics, const FixSearchConfig& cfg = {}) {
    return !ls_fixes(db, ics, cfg).fixes.empty();
}

/// Is there a fix within square distance k?
inline bool dfp(const Instance& db, const std::vector<DenialConstraint>& ics, const Rational& k,
                const FixSearchConfig& cfg = {}) {
    if (k < Rational(0)) throw ModelError("dfp: the distance bound must be nonnegative");
    FixResult result = ls_fixes(db, ics, cfg);
    return result.min_distance && *result.min_distance <= k;
}

/// The minimum square distance to a fix, absent when no fix exists.
inline std::optional<Rational> dfop(const Instance& db, const std::vector<DenialConstraint>& ics,
                                    const FixSearchConfig& cfg = {}) {
    return ls_fixes(db, ics, cfg).min_distance;
}

struct FixCheck {
    bool is_fix = false;
    bool is_ls_fix = false;
};

/// Fix checking: D2 is a fix of D iff it keeps keys and rigid values and
/// satisfies the constraints; a least-squares fix additionally attains the
/// minimum distance.
inline FixCheck verify_fix(const Instance& db, const Instance& candidate,
                           const std::vector<DenialConstraint>& ics,
                           const FixSearchConfig& cfg = {}) {
    FixCheck check;
    if (!same_key_space(db, candidate)) return check;
    if (!satisfies_all(candidate, ics, cfg.assignment_budget)) return check;
    check.is_fix = true;
    auto optimum = dfop(db, ics, cfg);
    check.is_ls_fix = optimum && distance(db, candidate) == *optimum;
    return check;
}

}  // namespace lsfix
