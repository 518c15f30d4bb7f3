#pragma once

#include <stdexcept>
#include <string>

namespace lsfix {

/// Syntax or validation failure in one of the textual inputs. Carries the
/// 1-based line/column of the offending token when known (0 = unknown).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line = 0, int column = 0)
        : std::runtime_error(format(message, line, column)), line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    static std::string format(const std::string& message, int line, int column) {
        if (line <= 0) return message;
        return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    }
    int line_;
    int column_;
};

/// Inputs are well formed but violate a model invariant (unknown relation,
/// arity mismatch, key/fixable overlap, key-space mismatch, ...).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured search budget was exhausted (candidate grid, assignment
/// enumeration, fix product).
class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested operation is not defined for the given constraint class,
/// e.g. fix search under aggregation constraints or cover methods on a
/// non-local constraint set.
class UnsupportedConstraint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lsfix
