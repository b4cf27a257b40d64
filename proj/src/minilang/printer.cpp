#include <ssd/minilang/printer.hpp>

#include <type_traits>

namespace ssd {

namespace {

/// Shared walker for print_unit (const tree) and canonicalize (mutable tree,
/// spans rewritten to the emitted offsets).
template <bool Record>
class Printer {
    template <typename T>
    using Ref = std::conditional_t<Record, T&, const T&>;

public:
    auto take() -> std::string { return std::move(out_); }

    void unit(Ref<Ast> ast) {
        for (auto& c : ast.classes) class_decl(c);
        if constexpr (Record) ast.span = {0, out_.size()};
    }

    void class_decl(Ref<ClassDecl> c) {
        auto begin = out_.size();
        out_ += "class ";
        name(c.name, c.name_span);
        out_ += " {\n";
        for (auto& f : c.fields) field(f);
        for (auto& m : c.methods) method(m);
        out_ += "}";
        set(c.span, begin);
        out_ += "\n";
    }

    void field(Ref<Field> f) {
        indent(1);
        auto begin = out_.size();
        type(f.type);
        out_ += ' ';
        name(f.name, f.name_span);
        if (f.init) {
            out_ += " = ";
            expr(*f.init, 0);
        }
        out_ += ";";
        set(f.span, begin);
        out_ += "\n";
    }

    void method(Ref<Method> m) {
        indent(1);
        auto begin = out_.size();
        type(m.return_type);
        out_ += ' ';
        name(m.name, m.name_span);
        out_ += '(';
        bool first = true;
        for (auto& p : m.params) {
            if (!first) out_ += ", ";
            first = false;
            auto pb = out_.size();
            type(p.type);
            out_ += ' ';
            name(p.name, p.name_span);
            set(p.span, pb);
        }
        out_ += ") {\n";
        for (auto& s : m.body) statement(s, 2);
        indent(1);
        out_ += "}";
        set(m.span, begin);
        out_ += "\n";
    }

    void statement(Ref<Stmt> s, int depth) {
        indent(depth);
        auto begin = out_.size();
        switch (s.kind) {
            case StmtKind::var_decl:
                type(s.type);
                out_ += ' ';
                name(s.name, s.name_span);
                if (s.value) {
                    out_ += " = ";
                    expr(*s.value, 0);
                }
                out_ += ';';
                break;
            case StmtKind::assign:
                name(s.name, s.name_span);
                out_ += " = ";
                expr(*s.value, 0);
                out_ += ';';
                break;
            case StmtKind::ret:
                out_ += "return";
                if (s.value) {
                    out_ += ' ';
                    expr(*s.value, 0);
                }
                out_ += ';';
                break;
            case StmtKind::expr:
                expr(*s.value, 0);
                out_ += ';';
                break;
            case StmtKind::if_stmt:
            case StmtKind::while_stmt:
                out_ += s.kind == StmtKind::if_stmt ? "if (" : "while (";
                expr(*s.value, 0);
                out_ += ") {\n";
                for (auto& c : s.body) statement(c, depth + 1);
                indent(depth);
                out_ += '}';
                if (s.has_else) {
                    out_ += " else {\n";
                    for (auto& c : s.else_body) statement(c, depth + 1);
                    indent(depth);
                    out_ += '}';
                }
                break;
        }
        set(s.span, begin);
        out_ += '\n';
    }

    /// `min_prec` is the weakest operator allowed without parentheses.
    void expr(Ref<Expr> e, int min_prec) {
        auto begin = out_.size();
        switch (e.kind) {
            case ExprKind::int_literal:
            case ExprKind::bool_literal:
            case ExprKind::string_literal:
            case ExprKind::name:
                out_ += e.text;
                break;
            case ExprKind::call: {
                out_ += e.text;
                out_ += '(';
                bool first = true;
                for (auto& a : e.operands) {
                    if (!first) out_ += ", ";
                    first = false;
                    expr(a, 0);
                }
                out_ += ')';
                break;
            }
            case ExprKind::binary: {
                int prec = precedence(e.op);
                bool paren = prec < min_prec;
                if (paren) {
                    out_ += '(';
                    begin = out_.size();
                }
                expr(e.operands[0], prec);
                out_ += ' ';
                out_ += to_string(e.op);
                out_ += ' ';
                expr(e.operands[1], prec + 1);
                set(e.span, begin);
                if (paren) out_ += ')';
                return;
            }
        }
        set(e.span, begin);
    }

    void type(Ref<TypeRef> t) {
        auto begin = out_.size();
        out_ += t.name;
        set(t.span, begin);
    }

    void name(const std::string& n, Ref<Span> span) {
        auto begin = out_.size();
        out_ += n;
        set(span, begin);
    }

    void statement_only(Ref<Stmt> s, int depth) { statement(s, depth); }

private:
    void indent(int depth) { out_.append(static_cast<std::size_t>(depth) * 4, ' '); }

    void set(Ref<Span> span, std::size_t begin) {
        if constexpr (Record) span = {begin, out_.size()};
    }

    std::string out_;
};

}  // namespace

auto print_unit(const Ast& ast) -> std::string {
    Printer<false> p;
    p.unit(ast);
    return p.take();
}

auto print_statement(const Stmt& stmt, int indent) -> std::string {
    Printer<false> p;
    p.statement_only(stmt, indent);
    auto s = p.take();
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

auto print_expression(const Expr& expr) -> std::string {
    Printer<false> p;
    p.expr(expr, 0);
    return p.take();
}

auto canonicalize(Ast& ast) -> std::string {
    Printer<true> p;
    p.unit(ast);
    return p.take();
}

}  // namespace ssd
