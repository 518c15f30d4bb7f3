#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lsfix/ast.hpp"
#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"
#include "lsfix/rational.hpp"

namespace lsfix {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

enum class TokKind { Name, Number, Symbol, Punct, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    int line = 0;
    int column = 0;
};

/// Hand-rolled lexer for the schema/constraint/query DSLs. '#' starts a line
/// comment; symbol constants are quoted with ' or "; a '.' is part of a
/// number only when directly followed by a digit (otherwise it terminates a
/// statement).
class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { tokenize(); }

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = pos_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    Token next() {
        const Token& t = peek();
        if (t.kind != TokKind::End) ++pos_;
        return t;
    }
    bool at_end() const { return peek().kind == TokKind::End; }

    bool accept_punct(std::string_view p) {
        if (peek().kind == TokKind::Punct && peek().text == p) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept_name(std::string_view word) {
        if (peek().kind == TokKind::Name && peek().text == word) {
            ++pos_;
            return true;
        }
        return false;
    }
    Token expect_punct(std::string_view p) {
        if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
        return tokens_[pos_ - 1];
    }
    Token expect_name(const std::string& what) {
        if (peek().kind != TokKind::Name) fail("expected " + what);
        return next();
    }
    void expect_keyword(std::string_view word) {
        if (!accept_name(word)) fail("expected '" + std::string(word) + "'");
    }
    [[noreturn]] void fail(const std::string& message) const {
        const Token& t = peek();
        std::string got = t.kind == TokKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(message + ", got " + got, t.line, t.column);
    }

private:
    void tokenize() {
        int line = 1, col = 1;
        std::size_t i = 0;
        auto advance = [&](std::size_t n) {
            for (std::size_t k = 0; k < n; ++k, ++i) {
                if (text_[i] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
        };
        while (i < text_.size()) {
            char c = text_[i];
            if (c == '#') {
                while (i < text_.size() && text_[i] != '\n') advance(1);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance(1);
                continue;
            }
            Token tok;
            tok.line = line;
            tok.column = col;
            if (c == '\'' || c == '"') {
                char quote = c;
                std::size_t j = i + 1;
                while (j < text_.size() && text_[j] != quote && text_[j] != '\n') ++j;
                if (j >= text_.size() || text_[j] != quote)
                    throw ParseError("unterminated symbol literal", line, col);
                tok.kind = TokKind::Symbol;
                tok.text = std::string(text_.substr(i + 1, j - i - 1));
                advance(j - i + 1);
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t j = i;
                while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
                if (j + 1 < text_.size() && text_[j] == '.' &&
                    std::isdigit(static_cast<unsigned char>(text_[j + 1]))) {
                    ++j;
                    while (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) ++j;
                }
                tok.kind = TokKind::Number;
                tok.text = std::string(text_.substr(i, j - i));
                advance(j - i);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i;
                while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) ||
                                            text_[j] == '_'))
                    ++j;
                tok.kind = TokKind::Name;
                tok.text = std::string(text_.substr(i, j - i));
                advance(j - i);
            } else {
                tok.kind = TokKind::Punct;
                std::string_view rest = text_.substr(i);
                for (std::string_view p : {"<-", "<=", ">=", "!="}) {
                    if (rest.starts_with(p)) {
                        tok.text = std::string(p);
                        break;
                    }
                }
                if (tok.text.empty()) {
                    static constexpr std::string_view singles = "(),:.<>=+-*/";
                    if (singles.find(c) == std::string_view::npos)
                        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
                    tok.text = std::string(1, c);
                }
                advance(tok.text.size());
            }
            tokens_.push_back(std::move(tok));
        }
        tokens_.push_back({TokKind::End, "", line, col});
    }

    std::string_view text_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

inline std::optional<CompareOp> parse_op(const std::string& text) {
    if (text == "=") return CompareOp::Eq;
    if (text == "!=") return CompareOp::Ne;
    if (text == "<") return CompareOp::Lt;
    if (text == ">") return CompareOp::Gt;
    if (text == "<=") return CompareOp::Le;
    if (text == ">=") return CompareOp::Ge;
    return std::nullopt;
}

inline std::optional<AggFunc> parse_agg(const std::string& text) {
    if (text == "sum") return AggFunc::Sum;
    if (text == "count") return AggFunc::Count;
    if (text == "countd") return AggFunc::CountDistinct;
    if (text == "avg") return AggFunc::Avg;
    return std::nullopt;
}

inline std::int64_t parse_int(Lexer& lex) {
    bool negative = lex.accept_punct("-");
    if (lex.peek().kind != TokKind::Number || lex.peek().text.find('.') != std::string::npos)
        lex.fail("expected integer");
    std::int64_t v = std::stoll(lex.next().text);
    return negative ? -v : v;
}

inline Term parse_term(Lexer& lex) {
    const Token& t = lex.peek();
    if (t.kind == TokKind::Symbol) return Term(Value(lex.next().text));
    if (t.kind == TokKind::Name) return Term(Variable{lex.next().text});
    if (t.kind == TokKind::Number || (t.kind == TokKind::Punct && t.text == "-"))
        return Term(Value(parse_int(lex)));
    lex.fail("expected a term");
}

inline CompareOp expect_op(Lexer& lex) {
    if (lex.peek().kind == TokKind::Punct)
        if (auto op = parse_op(lex.peek().text)) {
            lex.next();
            return *op;
        }
    lex.fail("expected a comparison operator");
}

inline Atom parse_atom(Lexer& lex) {
    Atom atom;
    atom.relation = lex.expect_name("relation name").text;
    lex.expect_punct("(");
    if (!lex.accept_punct(")")) {
        do {
            atom.args.push_back(parse_term(lex));
        } while (lex.accept_punct(","));
        lex.expect_punct(")");
    }
    return atom;
}

/// Comma-separated atoms followed by comparisons; atoms must come first and
/// are recognized by a '(' after the name.
inline void parse_body(Lexer& lex, std::vector<Atom>& atoms, std::vector<Comparison>& comps,
                       const std::string& where) {
    bool in_atoms = true;
    do {
        bool looks_like_atom = lex.peek().kind == TokKind::Name &&
                               lex.peek(1).kind == TokKind::Punct && lex.peek(1).text == "(";
        if (looks_like_atom) {
            if (!in_atoms) lex.fail(where + ": atoms must precede comparisons");
            atoms.push_back(parse_atom(lex));
        } else {
            in_atoms = false;
            Comparison c;
            c.lhs = parse_term(lex);
            c.op = expect_op(lex);
            c.rhs = parse_term(lex);
            comps.push_back(std::move(c));
        }
    } while (lex.accept_punct(","));
}

inline AggExpr parse_agg_expr(Lexer& lex);

inline AggExpr parse_agg_primary(Lexer& lex) {
    if (lex.accept_punct("(")) {
        AggExpr e = parse_agg_expr(lex);
        lex.expect_punct(")");
        return e;
    }
    if (lex.peek().kind == TokKind::Name) return AggExpr::attribute(lex.next().text);
    return AggExpr::constant(parse_int(lex));
}

inline AggExpr parse_agg_mul(Lexer& lex) {
    AggExpr e = parse_agg_primary(lex);
    while (lex.accept_punct("*"))
        e = AggExpr::node(AggExpr::Kind::Mul, std::move(e), parse_agg_primary(lex));
    return e;
}

inline AggExpr parse_agg_expr(Lexer& lex) {
    AggExpr e = parse_agg_mul(lex);
    while (true) {
        if (lex.accept_punct("+"))
            e = AggExpr::node(AggExpr::Kind::Add, std::move(e), parse_agg_mul(lex));
        else if (lex.accept_punct("-"))
            e = AggExpr::node(AggExpr::Kind::Sub, std::move(e), parse_agg_mul(lex));
        else
            break;
    }
    return e;
}

inline AggSide parse_agg_side(Lexer& lex) {
    AggSide side;
    Token fn = lex.expect_name("aggregation function");
    auto func = parse_agg(fn.text);
    if (!func || *func == AggFunc::CountDistinct)
        throw ParseError("aggregation constraints allow sum, count or avg", fn.line, fn.column);
    side.func = *func;
    lex.expect_punct("(");
    side.argument = parse_agg_expr(lex);
    if (lex.accept_punct(":")) {
        do {
            AttrComparison f;
            f.attr = lex.expect_name("attribute name").text;
            f.op = expect_op(lex);
            if (lex.peek().kind == TokKind::Symbol)
                f.rhs = Value(lex.next().text);
            else
                f.rhs = Value(parse_int(lex));
            side.filter.push_back(std::move(f));
        } while (lex.accept_punct(","));
    }
    lex.expect_punct(")");
    lex.expect_keyword("OF");
    side.relation = lex.expect_name("relation name").text;
    return side;
}

inline ConjunctiveQuery parse_conjunctive(Lexer& lex, const Schema& schema) {
    ConjunctiveQuery q;
    q.name = lex.expect_name("query name").text;
    lex.expect_punct("(");
    bool first = true;
    while (!lex.accept_punct(")")) {
        if (!first) lex.expect_punct(",");
        first = false;
        Token head = lex.expect_name("head variable or aggregate");
        if (lex.peek().kind == TokKind::Punct && lex.peek().text == "(") {
            auto func = parse_agg(head.text);
            if (!func)
                throw ParseError("unknown aggregation function '" + head.text + "'", head.line,
                                 head.column);
            if (q.aggregate)
                throw ParseError("at most one aggregate per query", head.line, head.column);
            lex.expect_punct("(");
            q.aggregate = Aggregate{*func, lex.expect_name("aggregation variable").text};
            lex.expect_punct(")");
        } else {
            if (q.aggregate)
                throw ParseError("the aggregate must be the last head entry", head.line, head.column);
            q.head_vars.push_back(head.text);
        }
    }
    lex.expect_punct("<-");
    parse_body(lex, q.atoms, q.comparisons, q.name);
    lex.expect_punct(".");
    q.validate(schema);
    return q;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Parses a schema file:
///   relation NAME(attr: int|sym [key] [fix [weight RATIONAL]], ...)
inline Schema parse_schema(std::string_view text) {
    detail::Lexer lex(text);
    Schema schema;
    while (!lex.at_end()) {
        lex.expect_keyword("relation");
        RelationSchema rs;
        rs.name = lex.expect_name("relation name").text;
        lex.expect_punct("(");
        do {
            AttributeSpec attr;
            detail::Token name = lex.expect_name("attribute name");
            attr.name = name.text;
            lex.expect_punct(":");
            if (lex.accept_name("int"))
                attr.type = AttrType::Int;
            else if (lex.accept_name("sym"))
                attr.type = AttrType::Sym;
            else
                lex.fail("expected 'int' or 'sym'");
            bool is_key = lex.accept_name("key");
            bool is_fix = lex.accept_name("fix");
            if (is_key && is_fix)
                throw ParseError(rs.name + "." + attr.name + ": key attributes cannot be fixable",
                                 name.line, name.column);
            if (is_fix && attr.type != AttrType::Int)
                throw ParseError(rs.name + "." + attr.name + ": fixable attributes must be integers",
                                 name.line, name.column);
            attr.kind = is_key ? AttrKind::Key : (is_fix ? AttrKind::Fixable : AttrKind::Rigid);
            if (is_fix && lex.accept_name("weight")) {
                bool negative = lex.accept_punct("-");
                if (lex.peek().kind != detail::TokKind::Number) lex.fail("expected a weight");
                detail::Token w = lex.next();
                std::string weight_text = w.text;
                if (lex.accept_punct("/")) {
                    if (lex.peek().kind != detail::TokKind::Number) lex.fail("expected a denominator");
                    weight_text += "/" + lex.next().text;
                }
                if (negative) weight_text = "-" + weight_text;
                try {
                    attr.weight = Rational::parse(weight_text);
                } catch (const std::invalid_argument& e) {
                    throw ParseError(e.what(), w.line, w.column);
                }
                if (!(attr.weight > Rational(0)))
                    throw ParseError(rs.name + "." + attr.name + ": weight must be positive", w.line,
                                     w.column);
            }
            rs.attributes.push_back(std::move(attr));
        } while (lex.accept_punct(","));
        lex.expect_punct(")");
        try {
            schema.add(std::move(rs));
        } catch (const ModelError& e) {
            throw ParseError(e.what());
        }
    }
    return schema;
}

/// Parses a constraint file holding denials and aggregation constraints:
///   LABEL: DENY atom, ..., comp, ... .
///   LABEL: AGG side OP (INT | side) .
inline ConstraintSet parse_constraints(std::string_view text, const Schema& schema) {
    detail::Lexer lex(text);
    ConstraintSet out;
    std::set<std::string> labels;
    while (!lex.at_end()) {
        std::string label = lex.expect_name("constraint label").text;
        if (!labels.insert(label).second)
            throw ParseError("duplicate constraint label " + label, lex.peek().line,
                             lex.peek().column);
        lex.expect_punct(":");
        if (lex.accept_name("DENY")) {
            DenialConstraint dc;
            dc.label = label;
            detail::parse_body(lex, dc.atoms, dc.comparisons, label);
            lex.expect_punct(".");
            if (dc.atoms.empty()) throw ParseError(label + ": a denial needs at least one atom");
            bind_denial(dc, schema);  // arity, typing and boundedness checks
            out.constraints.emplace_back(std::move(dc));
        } else if (lex.accept_name("AGG")) {
            AggregationConstraint ac;
            ac.label = label;
            ac.left = detail::parse_agg_side(lex);
            ac.op = detail::expect_op(lex);
            if (lex.peek().kind == detail::TokKind::Name)
                ac.right = detail::parse_agg_side(lex);
            else
                ac.bound = detail::parse_int(lex);
            lex.expect_punct(".");
            ac.validate(schema);
            out.constraints.emplace_back(std::move(ac));
        } else {
            lex.fail(label + ": expected DENY or AGG");
        }
    }
    return out;
}

/// Denial-only version; rejects aggregation constraints.
inline std::vector<DenialConstraint> parse_denials(std::string_view text, const Schema& schema) {
    ConstraintSet set = parse_constraints(text, schema);
    std::vector<DenialConstraint> out;
    for (auto& c : set.constraints) {
        if (!std::holds_alternative<DenialConstraint>(c))
            throw ParseError(constraint_label(c) + ": expected a denial constraint");
        out.push_back(std::get<DenialConstraint>(std::move(c)));
    }
    return out;
}

/// Parses either a conjunctive query "q(x, sum(z)) <- ... ." or an aggregate
/// comparison "ASK sum(z) > 5 FROM q(sum(z)) <- ... .".
inline ParsedQuery parse_query(std::string_view text, const Schema& schema) {
    detail::Lexer lex(text);
    if (lex.accept_name("ASK")) {
        AggregateComparisonQuery acq;
        detail::Token fn = lex.expect_name("aggregation function");
        auto func = detail::parse_agg(fn.text);
        if (!func) throw ParseError("unknown aggregation function '" + fn.text + "'", fn.line, fn.column);
        lex.expect_punct("(");
        std::string var = lex.expect_name("aggregation variable").text;
        lex.expect_punct(")");
        acq.op = detail::expect_op(lex);
        acq.threshold = detail::parse_int(lex);
        lex.expect_keyword("FROM");
        acq.query = detail::parse_conjunctive(lex, schema);
        if (!lex.at_end()) lex.fail("trailing input after query");
        if (!acq.query.aggregate || acq.query.aggregate->func != *func ||
            acq.query.aggregate->var != var)
            throw ParseError("ASK aggregate does not match the query head");
        acq.validate(schema);
        return acq;
    }
    ConjunctiveQuery q = detail::parse_conjunctive(lex, schema);
    if (!lex.at_end()) lex.fail("trailing input after query");
    return q;
}

}  // namespace lsfix
