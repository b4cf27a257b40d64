/// @file edit_op.hpp
/// @brief Semantic edit operations and their application to a tree.
///
/// An EditOp names what changed (rename a method, add a parameter, replace a
/// statement, ...) rather than which characters changed. Applying one yields
/// the set of elements it touched: the target, every rewritten reference site
/// of a renamed declaration, and every created or deleted element.

#pragma once

#include <ssd/depcore/elements.hpp>
#include <ssd/semantics/semantics.hpp>

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssd {

enum class OpKind {
    create_class,
    rename_class,
    delete_class,
    add_field,
    rename_field,
    set_field_type,
    set_field_init,
    add_method,
    rename_method,
    set_return_type,
    delete_method,
    add_param,
    rename_param,
    set_param_type,
    remove_param,
    insert_statement,
    replace_statement,
    delete_statement,
};

auto to_string(OpKind kind) -> std::string_view;
auto op_kind_from_string(std::string_view name) -> std::optional<OpKind>;

/// Payload fields are interpreted per kind:
///   name  - new name (rename_*) or created name (create_class, add_*)
///   type  - field/param/return type
///   text  - statement source, field initializer expression, or the
///           parameter list of add_method ("int a, bool b")
///   index - insertion position (add_param, insert_statement); append if unset
///   block - "body", "then" or "else" for insert_statement
struct EditOp {
    OpKind kind = OpKind::rename_method;
    ElementId target = no_element;  // edited element, or the parent for creation ops
    std::string target_name;        // qualified name, resolved when target is unset
    std::string name;
    std::string type;
    std::string text;
    std::optional<std::size_t> index;
    std::string block;
    std::vector<ElementId> created;  // fixed on first application, reused on replay
};

class OpError : public std::runtime_error {
public:
    OpError(std::string code, const std::string& message) : std::runtime_error(message), code_(std::move(code)) {}
    auto code() const -> const std::string& { return code_; }

private:
    std::string code_;
};

struct ApplyOutcome {
    std::vector<ElementId> touched;  // sorted, unique, never empty
    std::vector<ElementId> created;
    std::vector<ElementId> deleted;
    ElementId anchor = no_element;   // class that receives a new member
};

/// Applies `op` to `tree`. `bindings` must describe `tree` before the edit;
/// rename cascades and deletions use it to find reference sites. Spans in
/// `tree` are stale afterwards (see canonicalize).
///
/// Throws OpError with code "unknown-element" or "malformed-op"; `tree` is
/// unspecified after a throw.
auto apply_op(Ast& tree, const BindingTable& bindings, EditOp& op, IdAllocator& ids) -> ApplyOutcome;

auto to_json(const EditOp& op) -> nlohmann::json;

/// Throws OpError("malformed-op") on schema violations.
auto edit_op_from_json(const nlohmann::json& j) -> EditOp;

}  // namespace ssd
