/// @file printer.hpp
/// @brief Canonical MiniJ pretty-printer: four-space indents, one statement
/// per line, fields before methods.

#pragma once

#include <ssd/minilang/ast.hpp>

#include <string>

namespace ssd {

auto print_unit(const Ast& ast) -> std::string;
auto print_statement(const Stmt& stmt, int indent = 0) -> std::string;
auto print_expression(const Expr& expr) -> std::string;

/// Prints the unit and rewrites every span in `ast` to point into the
/// returned text. Used after semantic edits, when the old spans are stale.
auto canonicalize(Ast& ast) -> std::string;

}  // namespace ssd
