#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// Terms, atoms, comparisons
// ---------------------------------------------------------------------------

struct Variable {
    std::string name;
    friend bool operator==(const Variable&, const Variable&) = default;
    friend auto operator<=>(const Variable&, const Variable&) = default;
};

/// A term is a variable or a constant (integer or quoted symbol).
using Term = std::variant<Variable, Value>;

inline bool is_var(const Term& t) { return std::holds_alternative<Variable>(t); }
inline const std::string& var_name(const Term& t) { return std::get<Variable>(t).name; }
inline const Value& const_value(const Term& t) { return std::get<Value>(t); }

enum class CompareOp { Eq, Ne, Lt, Gt, Le, Ge };

inline std::string op_str(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Gt: return ">";
        case CompareOp::Le: return "<=";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

inline bool is_order_op(CompareOp op) {
    return op == CompareOp::Lt || op == CompareOp::Gt || op == CompareOp::Le ||
           op == CompareOp::Ge;
}

inline bool compare_ints(std::int64_t a, CompareOp op, std::int64_t b) {
    switch (op) {
        case CompareOp::Eq: return a == b;
        case CompareOp::Ne: return a != b;
        case CompareOp::Lt: return a < b;
        case CompareOp::Gt: return a > b;
        case CompareOp::Le: return a <= b;
        case CompareOp::Ge: return a >= b;
    }
    return false;
}

inline bool compare_values(const Value& a, CompareOp op, const Value& b) {
    if (is_int(a) != is_int(b)) throw ModelError("comparison across value types");
    if (is_int(a)) return compare_ints(as_int(a), op, as_int(b));
    if (is_order_op(op)) throw ModelError("order comparison on symbols");
    return op == CompareOp::Eq ? as_sym(a) == as_sym(b) : as_sym(a) != as_sym(b);
}

struct Atom {
    std::string relation;
    std::vector<Term> args;
};

struct Comparison {
    Term lhs;
    CompareOp op = CompareOp::Eq;
    Term rhs;
};

// ---------------------------------------------------------------------------
// Denial constraints
// ---------------------------------------------------------------------------

/// A universally quantified negated conjunction of database atoms plus
/// built-in comparisons. The instance satisfies the constraint iff no
/// assignment of tuples to atoms makes the whole body true.
struct DenialConstraint {
    std::string label;
    std::vector<Atom> atoms;
    std::vector<Comparison> comparisons;

    bool one_atom() const { return atoms.size() == 1; }
};

/// Where each variable of a denial or query body is bound: every occurrence
/// as (atom index, argument position), with the attribute type taken from
/// the schema.
struct VarOccurrence {
    std::size_t atom = 0;
    std::size_t position = 0;
};

struct BodyBindings {
    std::map<std::string, std::vector<VarOccurrence>> occurrences;
    std::map<std::string, AttrType> types;

    AttrType type_of(const std::string& var) const {
        auto it = types.find(var);
        if (it == types.end()) throw ModelError("unbound variable " + var);
        return it->second;
    }
};

inline AttrType term_type(const Term& t, const BodyBindings& bindings) {
    if (is_var(t)) return bindings.type_of(var_name(t));
    return is_int(const_value(t)) ? AttrType::Int : AttrType::Sym;
}

/// Collects variable occurrences over a body and type-checks atoms against
/// the schema. Shared by denials and query bodies.
inline BodyBindings bind_body(const std::vector<Atom>& atoms,
                              const std::vector<Comparison>& comparisons,
                              const Schema& schema, const std::string& where) {
    BodyBindings bindings;
    for (std::size_t ai = 0; ai < atoms.size(); ++ai) {
        const Atom& atom = atoms[ai];
        const RelationSchema& rs = schema.at(atom.relation);
        if (atom.args.size() != rs.attributes.size())
            throw ModelError(where + ": " + atom.relation + " expects " +
                             std::to_string(rs.attributes.size()) + " arguments");
        for (std::size_t p = 0; p < atom.args.size(); ++p) {
            AttrType at = rs.attributes[p].type;
            const Term& term = atom.args[p];
            if (is_var(term)) {
                const std::string& v = var_name(term);
                auto [it, inserted] = bindings.types.emplace(v, at);
                if (!inserted && it->second != at)
                    throw ModelError(where + ": variable " + v + " used at both int and sym positions");
                bindings.occurrences[v].push_back({ai, p});
            } else {
                bool want_int = at == AttrType::Int;
                if (want_int != is_int(const_value(term)))
                    throw ModelError(where + ": constant type mismatch in " + atom.relation);
            }
        }
    }
    for (const auto& c : comparisons) {
        for (const Term* t : {&c.lhs, &c.rhs})
            if (is_var(*t) && !bindings.types.count(var_name(*t)))
                throw ModelError(where + ": comparison variable " + var_name(*t) +
                                 " not bound by any atom");
        AttrType lt = term_type(c.lhs, bindings);
        AttrType rt = term_type(c.rhs, bindings);
        if (lt != rt) throw ModelError(where + ": comparison across value types");
        if (lt == AttrType::Sym && is_order_op(c.op))
            throw ModelError(where + ": order comparison on symbols");
        if (is_var(c.lhs) && is_var(c.rhs) && is_order_op(c.op))
            throw ModelError(where + ": order comparison between two variables is not in the language");
    }
    return bindings;
}

inline BodyBindings bind_denial(const DenialConstraint& dc, const Schema& schema) {
    return bind_body(dc.atoms, dc.comparisons, schema, dc.label);
}

// ---------------------------------------------------------------------------
// Aggregation constraints
// ---------------------------------------------------------------------------

enum class AggFunc { Sum, Count, CountDistinct, Avg };

inline std::string agg_str(AggFunc f) {
    switch (f) {
        case AggFunc::Sum: return "sum";
        case AggFunc::Count: return "count";
        case AggFunc::CountDistinct: return "countd";
        case AggFunc::Avg: return "avg";
    }
    return "?";
}

/// Arithmetic over the attributes of one relation, used as the aggregation
/// argument of an aggregation constraint (e.g. sum(A1 + A2)).
struct AggExpr {
    enum class Kind { Attr, Const, Add, Sub, Mul };
    Kind kind = Kind::Const;
    std::string attr;          // Kind::Attr
    std::int64_t value = 0;    // Kind::Const
    std::vector<AggExpr> children;

    static AggExpr attribute(std::string name) {
        AggExpr e;
        e.kind = Kind::Attr;
        e.attr = std::move(name);
        return e;
    }
    static AggExpr constant(std::int64_t v) {
        AggExpr e;
        e.kind = Kind::Const;
        e.value = v;
        return e;
    }
    static AggExpr node(Kind k, AggExpr a, AggExpr b) {
        AggExpr e;
        e.kind = k;
        e.children = {std::move(a), std::move(b)};
        return e;
    }
};

/// Filter comparisons inside an aggregation constraint refer to attributes
/// of the side's relation by name, compared against constants.
struct AttrComparison {
    std::string attr;
    CompareOp op = CompareOp::Eq;
    Value rhs;
};

struct AggSide {
    std::string relation;
    AggFunc func = AggFunc::Sum;
    AggExpr argument;
    std::vector<AttrComparison> filter;
};

/// sum/count/avg constraint over one or two relations, e.g.
///   sum(A1 : A2 = 3) OF R > 5      (filtering, single relation)
///   sum(A1) OF R1 = sum(A1) OF R2  (multi-relation)
struct AggregationConstraint {
    std::string label;
    AggSide left;
    CompareOp op = CompareOp::Eq;
    std::optional<std::int64_t> bound;  // right side when it is a number
    std::optional<AggSide> right;       // right side when it is an aggregate

    void validate(const Schema& schema) const {
        auto check_side = [&](const AggSide& s) {
            const RelationSchema& rs = schema.at(s.relation);
            auto check_expr = [&](auto&& self, const AggExpr& e) -> void {
                if (e.kind == AggExpr::Kind::Attr) {
                    auto p = rs.position_of(e.attr);
                    if (!p) throw ModelError(label + ": unknown attribute " + e.attr);
                    if (rs.attributes[*p].type != AttrType::Int)
                        throw ModelError(label + ": aggregation argument " + e.attr + " is not integer");
                }
                for (const auto& c : e.children) self(self, c);
            };
            check_expr(check_expr, s.argument);
            for (const auto& f : s.filter) {
                auto p = rs.position_of(f.attr);
                if (!p) throw ModelError(label + ": unknown attribute " + f.attr);
                bool want_int = rs.attributes[*p].type == AttrType::Int;
                if (want_int != is_int(f.rhs))
                    throw ModelError(label + ": filter type mismatch on " + f.attr);
                if (!want_int && is_order_op(f.op))
                    throw ModelError(label + ": order comparison on symbols");
            }
        };
        check_side(left);
        if (right) check_side(*right);
        if (!right && !bound) throw ModelError(label + ": missing right-hand side");
    }
};

/// A flexible integrity constraint is a denial or an aggregation constraint.
using Constraint = std::variant<DenialConstraint, AggregationConstraint>;

inline const std::string& constraint_label(const Constraint& c) {
    return std::visit([](const auto& x) -> const std::string& { return x.label; }, c);
}

struct ConstraintSet {
    std::vector<Constraint> constraints;

    std::vector<const DenialConstraint*> denials() const {
        std::vector<const DenialConstraint*> out;
        for (const auto& c : constraints)
            if (const auto* d = std::get_if<DenialConstraint>(&c)) out.push_back(d);
        return out;
    }
    bool has_aggregation() const {
        for (const auto& c : constraints)
            if (std::holds_alternative<AggregationConstraint>(c)) return true;
        return false;
    }
    bool empty() const { return constraints.empty(); }
};

// ---------------------------------------------------------------------------
// Constraint classification
// ---------------------------------------------------------------------------

enum class DenialClass { Linear, Extended, Aggregation };

inline std::string denial_class_str(DenialClass c) {
    switch (c) {
        case DenialClass::Linear: return "linear";
        case DenialClass::Extended: return "extended";
        case DenialClass::Aggregation: return "has-aggregation";
    }
    return "?";
}

/// Extended iff some != holds between two variables; joins via repeated
/// variables stay linear.
inline DenialClass classify_denial(const DenialConstraint& dc) {
    for (const auto& c : dc.comparisons)
        if (c.op == CompareOp::Ne && is_var(c.lhs) && is_var(c.rhs))
            return DenialClass::Extended;
    return DenialClass::Linear;
}

inline DenialClass classify_constraint(const Constraint& c) {
    if (std::holds_alternative<AggregationConstraint>(c)) return DenialClass::Aggregation;
    return classify_denial(std::get<DenialConstraint>(c));
}

// ---------------------------------------------------------------------------
// Explicit form
// ---------------------------------------------------------------------------

/// Rewrites implicit joins into explicit equalities: after this, every atom
/// argument is a distinct fresh-or-original variable and every join or
/// constant selection appears as a comparison. Internal analysis form; the
/// fresh variables are not valid surface identifiers.
inline DenialConstraint explicit_form(const DenialConstraint& dc) {
    DenialConstraint out;
    out.label = dc.label;
    out.comparisons = dc.comparisons;
    std::set<std::string> seen;
    int fresh = 0;
    for (const auto& atom : dc.atoms) {
        Atom rewritten;
        rewritten.relation = atom.relation;
        for (const auto& term : atom.args) {
            if (is_var(term) && seen.insert(var_name(term)).second) {
                rewritten.args.push_back(term);
                continue;
            }
            Variable v{"$v" + std::to_string(fresh++)};
            rewritten.args.push_back(v);
            if (is_var(term))
                out.comparisons.push_back({term, CompareOp::Eq, Term(v)});
            else
                out.comparisons.push_back({Term(v), CompareOp::Eq, term});
        }
        out.atoms.push_back(std::move(rewritten));
    }
    return out;
}

/// Strict <,> forms of a constant comparison over integers, following the
/// integer rewrites x<=c -> x<c+1, x>=c -> x>c-1, x=c -> (x>c-1 and x<c+1)
/// and x!=c -> (x<c or x>c). Used for locality analysis only; the original
/// operator is preserved for printing.
struct StrictForm {
    CompareOp op;  // Lt or Gt
    std::int64_t bound;
};

inline std::vector<StrictForm> normalized_strict_forms(CompareOp op, std::int64_t c) {
    switch (op) {
        case CompareOp::Lt: return {{CompareOp::Lt, c}};
        case CompareOp::Gt: return {{CompareOp::Gt, c}};
        case CompareOp::Le: return {{CompareOp::Lt, c + 1}};
        case CompareOp::Ge: return {{CompareOp::Gt, c - 1}};
        case CompareOp::Eq: return {{CompareOp::Gt, c - 1}, {CompareOp::Lt, c + 1}};
        case CompareOp::Ne: return {{CompareOp::Lt, c}, {CompareOp::Gt, c}};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Conjunctive queries
// ---------------------------------------------------------------------------

struct Aggregate {
    AggFunc func = AggFunc::Sum;
    std::string var;
};

struct ConjunctiveQuery {
    std::string name = "q";
    std::vector<std::string> head_vars;
    std::optional<Aggregate> aggregate;
    std::vector<Atom> atoms;
    std::vector<Comparison> comparisons;

    bool scalar() const { return head_vars.empty(); }
    bool ground() const { return head_vars.empty() && !aggregate; }

    /// The non-aggregate matrix: the same body with the aggregate dropped
    /// (its variable demoted to an ordinary body variable).
    ConjunctiveQuery nam() const {
        ConjunctiveQuery q = *this;
        q.aggregate.reset();
        return q;
    }

    void validate(const Schema& schema) const {
        BodyBindings bindings = bind_body(atoms, comparisons, schema, name);
        for (const auto& v : head_vars)
            if (!bindings.types.count(v))
                throw ModelError(name + ": head variable " + v + " not bound in body");
        if (aggregate) {
            if (!bindings.types.count(aggregate->var))
                throw ModelError(name + ": aggregation variable " + aggregate->var +
                                 " not bound in body");
            for (const auto& v : head_vars)
                if (v == aggregate->var)
                    throw ModelError(name + ": aggregation variable may not appear in the head");
            bool needs_int = aggregate->func == AggFunc::Sum || aggregate->func == AggFunc::Avg;
            if (needs_int && bindings.type_of(aggregate->var) != AttrType::Int)
                throw ModelError(name + ": sum/avg require an integer aggregation attribute");
        }
    }
};

/// ASK agg(z) OP k FROM <scalar aggregate query>.
struct AggregateComparisonQuery {
    ConjunctiveQuery query;
    CompareOp op = CompareOp::Gt;
    std::int64_t threshold = 0;

    void validate(const Schema& schema) const {
        query.validate(schema);
        if (!query.head_vars.empty())
            throw ModelError(query.name + ": aggregate comparison requires an empty head");
        if (!query.aggregate)
            throw ModelError(query.name + ": aggregate comparison requires an aggregate");
    }
};

using ParsedQuery = std::variant<ConjunctiveQuery, AggregateComparisonQuery>;

// ---------------------------------------------------------------------------
// Pretty printing (inverse of the parser; parse(print(x)) == x)
// ---------------------------------------------------------------------------

inline std::string term_str(const Term& t) {
    if (is_var(t)) return var_name(t);
    const Value& v = const_value(t);
    return is_int(v) ? std::to_string(as_int(v)) : "'" + as_sym(v) + "'";
}

inline std::string atom_str(const Atom& a) {
    std::string out = a.relation + "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ", ";
        out += term_str(a.args[i]);
    }
    return out + ")";
}

inline std::string comparison_str(const Comparison& c) {
    return term_str(c.lhs) + " " + op_str(c.op) + " " + term_str(c.rhs);
}

inline std::string denial_str(const DenialConstraint& dc) {
    std::string out = dc.label + ": DENY ";
    bool first = true;
    for (const auto& a : dc.atoms) {
        if (!first) out += ", ";
        out += atom_str(a);
        first = false;
    }
    for (const auto& c : dc.comparisons) out += ", " + comparison_str(c);
    return out + ".";
}

inline std::string agg_expr_str(const AggExpr& e) {
    switch (e.kind) {
        case AggExpr::Kind::Attr: return e.attr;
        case AggExpr::Kind::Const: return std::to_string(e.value);
        case AggExpr::Kind::Add:
            return "(" + agg_expr_str(e.children[0]) + " + " + agg_expr_str(e.children[1]) + ")";
        case AggExpr::Kind::Sub:
            return "(" + agg_expr_str(e.children[0]) + " - " + agg_expr_str(e.children[1]) + ")";
        case AggExpr::Kind::Mul:
            return "(" + agg_expr_str(e.children[0]) + " * " + agg_expr_str(e.children[1]) + ")";
    }
    return "?";
}

inline std::string agg_side_str(const AggSide& s) {
    std::string out = agg_str(s.func) + "(" + agg_expr_str(s.argument);
    if (!s.filter.empty()) {
        out += " : ";
        for (std::size_t i = 0; i < s.filter.size(); ++i) {
            if (i) out += ", ";
            const auto& f = s.filter[i];
            std::string rhs = is_int(f.rhs) ? std::to_string(as_int(f.rhs)) : "'" + as_sym(f.rhs) + "'";
            out += f.attr + " " + op_str(f.op) + " " + rhs;
        }
    }
    return out + ") OF " + s.relation;
}

inline std::string aggregation_constraint_str(const AggregationConstraint& ac) {
    std::string out = ac.label + ": AGG " + agg_side_str(ac.left) + " " + op_str(ac.op) + " ";
    out += ac.right ? agg_side_str(*ac.right) : std::to_string(*ac.bound);
    return out + ".";
}

inline std::string constraint_str(const Constraint& c) {
    if (const auto* d = std::get_if<DenialConstraint>(&c)) return denial_str(*d);
    return aggregation_constraint_str(std::get<AggregationConstraint>(c));
}

inline std::string query_str(const ConjunctiveQuery& q) {
    std::string out = q.name + "(";
    for (std::size_t i = 0; i < q.head_vars.size(); ++i) {
        if (i) out += ", ";
        out += q.head_vars[i];
    }
    if (q.aggregate) {
        if (!q.head_vars.empty()) out += ", ";
        out += agg_str(q.aggregate->func) + "(" + q.aggregate->var + ")";
    }
    out += ") <- ";
    bool first = true;
    for (const auto& a : q.atoms) {
        if (!first) out += ", ";
        out += atom_str(a);
        first = false;
    }
    for (const auto& c : q.comparisons) out += ", " + comparison_str(c);
    return out + ".";
}

inline std::string query_str(const AggregateComparisonQuery& q) {
    return "ASK " + agg_str(q.query.aggregate->func) + "(" + q.query.aggregate->var + ") " +
           op_str(q.op) + " " + std::to_string(q.threshold) + " FROM " + query_str(q.query);
}

}  // namespace lsfix
