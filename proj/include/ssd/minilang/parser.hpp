/// @file parser.hpp
/// @brief Lexer and recursive-descent parser for MiniJ.

#pragma once

#include <ssd/minilang/ast.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ssd {

struct ParseDiagnostic {
    Span span;
    std::string code;  // unknown-token, unterminated-string, unexpected-token, ...
    std::string message;
};

/// Either a value or at least one diagnostic, never both.
template <typename T>
struct Parsed {
    std::optional<T> value;
    std::vector<ParseDiagnostic> diagnostics;

    auto ok() const -> bool { return value.has_value(); }
    explicit operator bool() const { return ok(); }
};

enum class TokenKind {
    identifier,
    int_literal,
    string_literal,
    keyword,
    punct,
    end_of_input,
};

struct Token {
    TokenKind kind = TokenKind::end_of_input;
    std::string text;
    Span span;
};

/// Tokenizes the whole input. Comments (`//` and `/* */`) are skipped.
auto tokenize(std::string_view src) -> Parsed<std::vector<Token>>;

auto is_keyword(std::string_view word) -> bool;

auto parse_unit(const SourceText& src) -> Parsed<Ast>;
auto parse_statement(const SourceText& src) -> Parsed<Stmt>;
auto parse_expression(const SourceText& src) -> Parsed<Expr>;

/// Parses a comma-separated parameter list such as "int a, bool b".
auto parse_params(const SourceText& src) -> Parsed<std::vector<Param>>;

/// Convenience overloads for inline snippets.
auto parse_unit(std::string_view text) -> Parsed<Ast>;
auto parse_statement(std::string_view text) -> Parsed<Stmt>;

/// 1-based line and column of a byte offset.
struct LineCol {
    std::size_t line = 1;
    std::size_t column = 1;
};

auto line_col(std::string_view text, std::size_t offset) -> LineCol;

}  // namespace ssd
