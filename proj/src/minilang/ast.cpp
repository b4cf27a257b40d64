#include <ssd/minilang/ast.hpp>
#include <ssd/minilang/visit.hpp>

#include <algorithm>

namespace ssd {

namespace {

template <typename T, typename Eq>
auto same_list(const std::vector<T>& a, const std::vector<T>& b, Eq eq) -> bool {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), eq);
}

auto same_type(const TypeRef& a, const TypeRef& b) -> bool { return a.name == b.name; }

auto same_opt_expr(const std::optional<Expr>& a, const std::optional<Expr>& b) -> bool {
    if (a.has_value() != b.has_value()) return false;
    return !a || same_structure(*a, *b);
}

auto same_stmt(const Stmt& a, const Stmt& b) -> bool { return same_structure(a, b); }

auto same_param(const Param& a, const Param& b) -> bool {
    return a.name == b.name && same_type(a.type, b.type);
}

auto same_field(const Field& a, const Field& b) -> bool {
    return a.name == b.name && same_type(a.type, b.type) && same_opt_expr(a.init, b.init);
}

auto same_method(const Method& a, const Method& b) -> bool {
    return a.name == b.name && same_type(a.return_type, b.return_type) &&
           same_list(a.params, b.params, same_param) && same_list(a.body, b.body, same_stmt);
}

auto same_class(const ClassDecl& a, const ClassDecl& b) -> bool {
    return a.name == b.name && same_list(a.fields, b.fields, same_field) &&
           same_list(a.methods, b.methods, same_method);
}

}  // namespace

auto same_structure(const Expr& a, const Expr& b) -> bool {
    if (a.kind != b.kind || a.text != b.text) return false;
    if (a.kind == ExprKind::binary && a.op != b.op) return false;
    return same_list(a.operands, b.operands,
                     [](const Expr& x, const Expr& y) { return same_structure(x, y); });
}

auto same_structure(const Stmt& a, const Stmt& b) -> bool {
    if (a.kind != b.kind || a.has_else != b.has_else) return false;
    if (a.kind == StmtKind::var_decl && !same_type(a.type, b.type)) return false;
    if ((a.kind == StmtKind::var_decl || a.kind == StmtKind::assign) && a.name != b.name) return false;
    return same_opt_expr(a.value, b.value) && same_list(a.body, b.body, same_stmt) &&
           same_list(a.else_body, b.else_body, same_stmt);
}

auto same_structure(const Ast& a, const Ast& b) -> bool {
    return same_list(a.classes, b.classes, same_class);
}

auto to_string(BinaryOp op) -> std::string_view {
    switch (op) {
        case BinaryOp::add: return "+";
        case BinaryOp::sub: return "-";
        case BinaryOp::mul: return "*";
        case BinaryOp::div: return "/";
        case BinaryOp::less: return "<";
        case BinaryOp::equal: return "==";
        case BinaryOp::logical_and: return "&&";
        case BinaryOp::logical_or: return "||";
    }
    return "?";
}

auto precedence(BinaryOp op) -> int {
    switch (op) {
        case BinaryOp::logical_or: return 1;
        case BinaryOp::logical_and: return 2;
        case BinaryOp::equal: return 3;
        case BinaryOp::less: return 4;
        case BinaryOp::add:
        case BinaryOp::sub: return 5;
        case BinaryOp::mul:
        case BinaryOp::div: return 6;
    }
    return 0;
}

auto is_builtin_type(std::string_view name) -> bool {
    return name == "int" || name == "bool" || name == "String" || name == "void";
}

auto to_string(ElementKind kind) -> std::string_view {
    switch (kind) {
        case ElementKind::class_decl: return "class";
        case ElementKind::field: return "field";
        case ElementKind::method: return "method";
        case ElementKind::param: return "param";
        case ElementKind::statement: return "statement";
    }
    return "?";
}

auto to_string(RefKind kind) -> std::string_view {
    switch (kind) {
        case RefKind::identifier: return "identifier";
        case RefKind::call: return "call";
        case RefKind::type_name: return "type";
    }
    return "?";
}

}  // namespace ssd
