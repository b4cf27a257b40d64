/// @file semantics.hpp
/// @brief Name resolution, type checking, and the build gate deciding whether
/// a program state is buildable.
///
/// All functions require a tree whose lockable elements carry non-zero,
/// unique ElementIds (see number_elements) and whose spans are real, i.e.
/// freshly parsed or canonicalized.

#pragma once

#include <ssd/minilang/ast.hpp>
#include <ssd/minilang/visit.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ssd {

/// A resolved reference: the `ordinal`-th site owned by element `from`
/// (in for_each_own_ref order) names declaration `target`.
struct RefSite {
    ElementId from = no_element;
    std::uint32_t ordinal = 0;
    RefKind kind = RefKind::identifier;
    std::string name;
    Span span;
    ElementId target = no_element;
};

struct BindingTable {
    std::vector<RefSite> refs;  // ordered by (from, ordinal)
    std::map<std::string, ElementId> classes;
    std::map<ElementId, std::map<std::string, ElementId>> class_scopes;
    std::map<ElementId, std::vector<std::pair<std::string, ElementId>>> method_scopes;

    auto find(ElementId from, std::uint32_t ordinal) const -> const RefSite*;
    auto sites_targeting(ElementId declaration) const -> std::vector<const RefSite*>;
};

struct BuildError {
    Span span;
    std::string code;
    std::string message;

    friend auto operator==(const BuildError&, const BuildError&) -> bool = default;
};

struct BuildReport {
    bool buildable = true;
    std::vector<BuildError> errors;
    std::string version_checked;
};

/// Binding is best-effort: `table` holds every site that did resolve, even
/// when `errors` is non-empty.
struct BindResult {
    BindingTable table;
    std::vector<BuildError> errors;

    auto ok() const -> bool { return errors.empty(); }
};

auto bind(const Ast& ast) -> BindResult;

/// Precondition: bind(ast) succeeded and produced `bindings`.
auto type_check(const Ast& ast, const BindingTable& bindings) -> BuildReport;

struct GateResult {
    BuildReport report;
    BindingTable bindings;  // complete only when report.buildable
};

/// bind then type_check. Errors sorted by (start offset, code).
auto build_gate(const Ast& ast, std::string version_label = {}) -> GateResult;

void sort_errors(std::vector<BuildError>& errors);

/// Assigns ids 1, 2, 3, ... in preorder to every element whose id is zero.
/// Returns the next free id.
auto number_elements(Ast& ast, ElementId first = 1) -> ElementId;

/// Parse, number, and gate a whole source file. Parse diagnostics are
/// reported as build errors.
struct CheckOutcome {
    std::optional<Ast> ast;
    GateResult gate;
};
auto check_source(const SourceText& src) -> CheckOutcome;

}  // namespace ssd
