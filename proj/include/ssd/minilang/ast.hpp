/// @file ast.hpp
/// @brief Abstract syntax tree for MiniJ, the small Java-like language the
/// coordination kernel edits.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ssd {

/// Stable identity of a lockable AST node (class, field, method, param,
/// statement). Zero means "not yet numbered".
using ElementId = std::uint64_t;
inline constexpr ElementId no_element = 0;

/// Half-open byte range into the source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    auto contains(const Span& other) const -> bool {
        return begin <= other.begin && other.end <= end;
    }
    friend auto operator==(const Span&, const Span&) -> bool = default;
};

struct SourceText {
    std::string text;
    std::string origin;
};

struct TypeRef {
    std::string name;
    Span span;
};

enum class BinaryOp { add, sub, mul, div, less, equal, logical_and, logical_or };

enum class ExprKind { int_literal, bool_literal, string_literal, name, call, binary };

/// Expressions are plain values; literal text, identifier and callee names
/// all live in `text`.
struct Expr {
    ExprKind kind = ExprKind::int_literal;
    std::string text;
    BinaryOp op = BinaryOp::add;
    std::vector<Expr> operands;  // binary: lhs, rhs; call: arguments
    Span span;
};

enum class StmtKind { var_decl, assign, ret, expr, if_stmt, while_stmt };

struct Stmt {
    ElementId id = no_element;
    StmtKind kind = StmtKind::expr;
    TypeRef type;                // var_decl
    std::string name;            // var_decl declared name, assign target
    Span name_span;
    std::optional<Expr> value;   // initializer, rhs, return value, expression, condition
    std::vector<Stmt> body;      // if-then block, while body
    std::vector<Stmt> else_body;
    bool has_else = false;
    Span span;
};

struct Param {
    ElementId id = no_element;
    TypeRef type;
    std::string name;
    Span name_span;
    Span span;
};

struct Field {
    ElementId id = no_element;
    TypeRef type;
    std::string name;
    Span name_span;
    std::optional<Expr> init;
    Span span;
};

struct Method {
    ElementId id = no_element;
    TypeRef return_type;
    std::string name;
    Span name_span;
    std::vector<Param> params;
    std::vector<Stmt> body;
    Span span;
};

struct ClassDecl {
    ElementId id = no_element;
    std::string name;
    Span name_span;
    std::vector<Field> fields;
    std::vector<Method> methods;
    Span span;
};

/// A compilation unit. Members print fields-first, so member order is
/// tracked per kind.
struct Ast {
    std::vector<ClassDecl> classes;
    Span span;
};

/// Structural equality ignores spans and element ids.
auto same_structure(const Expr& a, const Expr& b) -> bool;
auto same_structure(const Stmt& a, const Stmt& b) -> bool;
auto same_structure(const Ast& a, const Ast& b) -> bool;

auto to_string(BinaryOp op) -> std::string_view;

/// Binding strength, higher binds tighter.
auto precedence(BinaryOp op) -> int;

auto is_builtin_type(std::string_view name) -> bool;

}  // namespace ssd
