/// @file visit.hpp
/// @brief Traversal helpers over lockable elements and their reference sites.
///
/// Both helpers work on const and mutable trees. The reference-site order
/// produced by for_each_own_ref is the contract that lets the binder and the
/// rename cascade agree on site ordinals.

#pragma once

#include <ssd/minilang/ast.hpp>

#include <string_view>
#include <type_traits>

namespace ssd {

enum class ElementKind { class_decl, field, method, param, statement };

enum class RefKind { identifier, call, type_name };

auto to_string(ElementKind kind) -> std::string_view;
auto to_string(RefKind kind) -> std::string_view;

namespace detail {

template <typename E, typename F>
void refs_in_expr(E& e, F& fn) {
    if (e.kind == ExprKind::name) fn(RefKind::identifier, e.text, e.span);
    if (e.kind == ExprKind::call) fn(RefKind::call, e.text, e.span);
    for (auto& o : e.operands) refs_in_expr(o, fn);
}

template <typename T, typename F>
void refs_in_type(T& t, F& fn) {
    if (!is_builtin_type(t.name)) fn(RefKind::type_name, t.name, t.span);
}

template <typename Node, typename Base>
inline constexpr bool is_node = std::is_same_v<std::remove_const_t<Node>, Base>;

}  // namespace detail

/// Calls fn(RefKind, name, span) for each reference site owned directly by
/// `node`. Sites inside nested statements belong to those statements.
template <typename Node, typename F>
void for_each_own_ref(Node& node, F&& fn) {
    if constexpr (detail::is_node<Node, Field>) {
        detail::refs_in_type(node.type, fn);
        if (node.init) detail::refs_in_expr(*node.init, fn);
    } else if constexpr (detail::is_node<Node, Method>) {
        detail::refs_in_type(node.return_type, fn);
    } else if constexpr (detail::is_node<Node, Param>) {
        detail::refs_in_type(node.type, fn);
    } else if constexpr (detail::is_node<Node, Stmt>) {
        if (node.kind == StmtKind::var_decl) detail::refs_in_type(node.type, fn);
        if (node.kind == StmtKind::assign) fn(RefKind::identifier, node.name, node.name_span);
        if (node.value) detail::refs_in_expr(*node.value, fn);
    }
}

namespace detail {

template <typename S, typename F>
void walk_stmts(S& stmts, ElementId parent, F& fn) {
    for (auto& s : stmts) {
        fn(s, parent);
        walk_stmts(s.body, s.id, fn);
        walk_stmts(s.else_body, s.id, fn);
    }
}

}  // namespace detail

/// Preorder walk over every lockable element: fn(node, parent_id) with node
/// one of ClassDecl, Field, Method, Param, Stmt. Parent of a class is
/// no_element.
template <typename A, typename F>
    requires detail::is_node<A, Ast>
void for_each_element(A& ast, F&& fn) {
    for (auto& c : ast.classes) {
        fn(c, no_element);
        for (auto& f : c.fields) fn(f, c.id);
        for (auto& m : c.methods) {
            fn(m, c.id);
            for (auto& p : m.params) fn(p, m.id);
            detail::walk_stmts(m.body, m.id, fn);
        }
    }
}

/// Same as for_each_element, restricted to one method's params and body.
template <typename M, typename F>
    requires detail::is_node<M, Method>
void for_each_element_in(M& method, F&& fn) {
    fn(method, no_element);
    for (auto& p : method.params) fn(p, method.id);
    detail::walk_stmts(method.body, method.id, fn);
}

template <typename Node>
constexpr auto kind_of() -> ElementKind {
    if constexpr (detail::is_node<Node, ClassDecl>) return ElementKind::class_decl;
    else if constexpr (detail::is_node<Node, Field>) return ElementKind::field;
    else if constexpr (detail::is_node<Node, Method>) return ElementKind::method;
    else if constexpr (detail::is_node<Node, Param>) return ElementKind::param;
    else return ElementKind::statement;
}

}  // namespace ssd
