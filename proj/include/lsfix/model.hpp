#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "lsfix/errors.hpp"
#include "lsfix/rational.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

/// A database value: a signed integer or an uninterpreted symbol. Symbols
/// compare by byte equality only; they have no order.
using Value = std::variant<std::int64_t, std::string>;

inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline const std::string& as_sym(const Value& v) { return std::get<std::string>(v); }

inline std::string value_str(const Value& v) {
    return is_int(v) ? std::to_string(as_int(v)) : as_sym(v);
}

/// Deterministic total order used for canonical tuple ordering; not a
/// semantic order (symbols are unordered in the constraint language).
inline bool value_less(const Value& a, const Value& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    if (is_int(a)) return as_int(a) < as_int(b);
    return as_sym(a) < as_sym(b);
}

inline bool values_less(const std::vector<Value>& a, const std::vector<Value>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), value_less);
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class AttrKind { Key, Rigid, Fixable };
enum class AttrType { Int, Sym };

struct AttributeSpec {
    std::string name;
    AttrKind kind = AttrKind::Rigid;
    AttrType type = AttrType::Int;
    Rational weight = Rational(1);  // meaningful only when kind == Fixable

    bool fixable() const { return kind == AttrKind::Fixable; }
    bool is_key() const { return kind == AttrKind::Key; }
};

struct RelationSchema {
    std::string name;
    std::vector<AttributeSpec> attributes;

    std::vector<std::size_t> key_positions() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < attributes.size(); ++i)
            if (attributes[i].is_key()) out.push_back(i);
        return out;
    }
    std::vector<std::size_t> fixable_positions() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < attributes.size(); ++i)
            if (attributes[i].fixable()) out.push_back(i);
        return out;
    }
    std::optional<std::size_t> position_of(const std::string& attr) const {
        for (std::size_t i = 0; i < attributes.size(); ++i)
            if (attributes[i].name == attr) return i;
        return std::nullopt;
    }

    /// Enforces the attribute invariants: non-empty key of non-fixable
    /// attributes, unique names, fixable implies integer with positive weight.
    void validate() const {
        if (attributes.empty()) throw ModelError("relation " + name + " has no attributes");
        bool has_key = false;
        for (const auto& a : attributes) {
            if (a.is_key()) has_key = true;
            if (a.fixable() && a.type != AttrType::Int)
                throw ModelError(name + "." + a.name + ": fixable attributes must be integers");
            if (a.fixable() && !(a.weight > Rational(0)))
                throw ModelError(name + "." + a.name + ": weight must be positive");
            for (const auto& b : attributes)
                if (&a != &b && a.name == b.name)
                    throw ModelError(name + ": duplicate attribute " + a.name);
        }
        if (!has_key) throw ModelError("relation " + name + " has no key");
    }
};

struct Schema {
    std::vector<RelationSchema> relations;  // declaration order

    const RelationSchema* find(const std::string& name) const {
        for (const auto& r : relations)
            if (r.name == name) return &r;
        return nullptr;
    }
    const RelationSchema& at(const std::string& name) const {
        if (const auto* r = find(name)) return *r;
        throw ModelError("unknown relation " + name);
    }
    void add(RelationSchema r) {
        r.validate();
        if (find(r.name)) throw ModelError("duplicate relation " + r.name);
        relations.push_back(std::move(r));
    }
};

// ---------------------------------------------------------------------------
// Tuples and instances
// ---------------------------------------------------------------------------

struct Tuple {
    std::string relation;
    std::vector<Value> values;

    friend bool operator==(const Tuple& a, const Tuple& b) {
        return a.relation == b.relation && a.values == b.values;
    }
};

inline std::ostream& operator<<(std::ostream& os, const Tuple& t) {
    os << t.relation << "(";
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (i) os << ",";
        os << value_str(t.values[i]);
    }
    return os << ")";
}

inline std::vector<Value> key_of(const Tuple& t, const RelationSchema& rs) {
    std::vector<Value> k;
    for (auto p : rs.key_positions()) k.push_back(t.values[p]);
    return k;
}

/// A finite, key-unique database instance over a fixed schema. Tuples keep
/// their insertion order (relations in declaration order, rows in load
/// order); all derived tuple ids refer to that order.
class Instance {
public:
    Instance() = default;
    explicit Instance(Schema schema) : schema_(std::move(schema)) {
        rows_.resize(schema_.relations.size());
    }

    const Schema& schema() const { return schema_; }

    void add(Tuple t) {
        std::size_t ri = relation_index(t.relation);
        const RelationSchema& rs = schema_.relations[ri];
        if (t.values.size() != rs.attributes.size())
            throw ModelError(t.relation + ": arity mismatch");
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            bool want_int = rs.attributes[i].type == AttrType::Int;
            if (want_int != is_int(t.values[i]))
                throw ModelError(t.relation + "." + rs.attributes[i].name + ": type mismatch");
        }
        auto k = key_of(t, rs);
        for (const auto& existing : rows_[ri])
            if (key_of(existing, rs) == k)
                throw ModelError(t.relation + ": duplicate key");
        rows_[ri].push_back(std::move(t));
    }

    const std::vector<Tuple>& rows(const std::string& relation) const {
        return rows_[relation_index(relation)];
    }

    std::size_t tuple_count() const {
        std::size_t n = 0;
        for (const auto& r : rows_) n += r.size();
        return n;
    }

    /// Flat view in insertion order; the position of a tuple in this view is
    /// its tuple id, used by violation sets and covers.
    std::vector<const Tuple*> all_tuples() const {
        std::vector<const Tuple*> out;
        for (const auto& r : rows_)
            for (const auto& t : r) out.push_back(&t);
        return out;
    }

    const Tuple& tuple(std::size_t tid) const {
        for (const auto& r : rows_) {
            if (tid < r.size()) return r[tid];
            tid -= r.size();
        }
        throw ModelError("tuple id out of range");
    }

    Instance with_replaced(std::size_t tid, Tuple replacement) const {
        Instance out = *this;
        for (auto& r : out.rows_) {
            if (tid < r.size()) {
                if (r[tid].relation != replacement.relation)
                    throw ModelError("replacement changes relation");
                r[tid] = std::move(replacement);
                return out;
            }
            tid -= r.size();
        }
        throw ModelError("tuple id out of range");
    }

    /// Canonical form: per relation, rows sorted by value vector. Two
    /// instances over the same schema are equal iff their canonical rows are.
    std::vector<std::vector<Tuple>> canonical_rows() const {
        auto sorted = rows_;
        for (auto& r : sorted)
            std::sort(r.begin(), r.end(), [](const Tuple& a, const Tuple& b) {
                return values_less(a.values, b.values);
            });
        return sorted;
    }

    friend bool operator==(const Instance& a, const Instance& b) {
        return a.canonical_rows() == b.canonical_rows();
    }
    friend bool operator<(const Instance& a, const Instance& b) {
        auto ca = a.canonical_rows(), cb = b.canonical_rows();
        return std::lexicographical_compare(
            ca.begin(), ca.end(), cb.begin(), cb.end(),
            [](const std::vector<Tuple>& x, const std::vector<Tuple>& y) {
                return std::lexicographical_compare(
                    x.begin(), x.end(), y.begin(), y.end(),
                    [](const Tuple& s, const Tuple& t) { return values_less(s.values, t.values); });
            });
    }

private:
    std::size_t relation_index(const std::string& name) const {
        for (std::size_t i = 0; i < schema_.relations.size(); ++i)
            if (schema_.relations[i].name == name) return i;
        throw ModelError("unknown relation " + name);
    }

    Schema schema_;
    std::vector<std::vector<Tuple>> rows_;  // parallel to schema_.relations
};

// ---------------------------------------------------------------------------
// Key-aligned operations
// ---------------------------------------------------------------------------

/// The unique tuple of `relation` whose key projection equals `key`, if any.
inline std::optional<Tuple> tuple_by_key(const Instance& db, const std::string& relation,
                                         const std::vector<Value>& key) {
    const RelationSchema& rs = db.schema().at(relation);
    if (key.size() != rs.key_positions().size())
        throw ModelError(relation + ": key arity mismatch");
    for (const auto& t : db.rows(relation))
        if (key_of(t, rs) == key) return t;
    return std::nullopt;
}

/// True iff both instances range over the same key values per relation and
/// agree on every rigid (non-fixable) attribute. This is the precondition
/// for the square distance to be defined.
inline bool same_key_space(const Instance& a, const Instance& b) {
    const Schema& schema = a.schema();
    if (schema.relations.size() != b.schema().relations.size())
        throw ModelError("schema mismatch");
    for (const auto& rs : schema.relations) {
        if (!b.schema().find(rs.name)) throw ModelError("schema mismatch: " + rs.name);
        const auto& ra = a.rows(rs.name);
        const auto& rb = b.rows(rs.name);
        if (ra.size() != rb.size()) return false;
        for (const auto& t : ra) {
            auto other = tuple_by_key(b, rs.name, key_of(t, rs));
            if (!other) return false;
            for (std::size_t i = 0; i < rs.attributes.size(); ++i)
                if (!rs.attributes[i].fixable() && !(t.values[i] == other->values[i]))
                    return false;
        }
    }
    return true;
}

/// Weighted square distance: sum over relations, fixable attributes A and
/// key values of weight(A) * (difference at A)^2. Exact rational.
inline Rational distance(const Instance& a, const Instance& b) {
    if (!same_key_space(a, b)) throw ModelError("instances do not share a key space");
    Rational total(0);
    for (const auto& rs : a.schema().relations) {
        auto fixables = rs.fixable_positions();
        if (fixables.empty()) continue;
        for (const auto& t : a.rows(rs.name)) {
            auto other = tuple_by_key(b, rs.name, key_of(t, rs));
            for (auto p : fixables) {
                Rational diff(as_int(t.values[p]) - as_int(other->values[p]));
                total += rs.attributes[p].weight * diff * diff;
            }
        }
    }
    return total;
}

/// Distance between two versions of a single tuple (the cost of a local fix).
inline Rational tuple_distance(const Tuple& from, const Tuple& to, const RelationSchema& rs) {
    Rational total(0);
    for (auto p : rs.fixable_positions()) {
        Rational diff(as_int(from.values[p]) - as_int(to.values[p]));
        total += rs.attributes[p].weight * diff * diff;
    }
    return total;
}

}  // namespace lsfix
