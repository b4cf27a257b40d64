#include <ssd/semantics/semantics.hpp>

#include <unordered_map>

namespace ssd {

namespace {

// Sentinel for sub-expressions that already produced an error.
const std::string error_type = "<error>";

class TypeChecker {
public:
    TypeChecker(const Ast& ast, const BindingTable& bindings, BuildReport& out)
        : bindings_(bindings), out_(out) {
        for_each_element(ast, [&](const auto& node, ElementId) {
            using N = std::remove_cvref_t<decltype(node)>;
            if constexpr (std::is_same_v<N, Field> || std::is_same_v<N, Param>) {
                decl_types_[node.id] = node.type.name;
            } else if constexpr (std::is_same_v<N, Stmt>) {
                if (node.kind == StmtKind::var_decl) decl_types_[node.id] = node.type.name;
            } else if constexpr (std::is_same_v<N, Method>) {
                methods_[node.id] = &node;
            }
        });
    }

    void run(const Ast& ast) {
        for (const auto& c : ast.classes) {
            for (const auto& f : c.fields) {
                begin_element(f.id);
                consume_type(f.type);
                if (f.init) expect(f.type.name, *f.init);
            }
            for (const auto& m : c.methods) {
                method_ = &m;
                for (const auto& s : m.body) statement(s);
            }
        }
    }

private:
    void begin_element(ElementId id) {
        from_ = id;
        ordinal_ = 0;
    }

    auto next_target() -> ElementId {
        const auto* site = bindings_.find(from_, ordinal_++);
        return site ? site->target : no_element;
    }

    void consume_type(const TypeRef& t) {
        if (!is_builtin_type(t.name)) ++ordinal_;
    }

    void error(Span span, std::string code, std::string message) {
        out_.errors.push_back({span, std::move(code), std::move(message)});
    }

    void expect(const std::string& want, const Expr& e) {
        auto got = type_of(e);
        if (got != want && got != error_type) {
            error(e.span, "type-mismatch", "expected " + want + " but found " + got);
        }
    }

    void statement(const Stmt& s) {
        begin_element(s.id);
        switch (s.kind) {
            case StmtKind::var_decl:
                consume_type(s.type);
                if (s.value) expect(s.type.name, *s.value);
                break;
            case StmtKind::assign: {
                auto target = next_target();
                auto it = decl_types_.find(target);
                auto want = it == decl_types_.end() ? error_type : it->second;
                auto got = type_of(*s.value);
                if (want != error_type && got != error_type && got != want) {
                    error(s.value->span, "type-mismatch", "expected " + want + " but found " + got);
                }
                break;
            }
            case StmtKind::ret: {
                const auto& want = method_->return_type.name;
                if (want == "void" && s.value) {
                    error(s.value->span, "type-mismatch", "void method cannot return a value");
                    type_of(*s.value);
                } else if (want != "void" && !s.value) {
                    error(s.span, "type-mismatch", "missing return value of type " + want);
                } else if (s.value) {
                    expect(want, *s.value);
                }
                break;
            }
            case StmtKind::expr:
                type_of(*s.value);
                break;
            case StmtKind::if_stmt:
            case StmtKind::while_stmt: {
                auto cond = type_of(*s.value);
                if (cond != "bool" && cond != error_type) {
                    error(s.value->span, "bad-condition-type", "condition must be bool but is " + cond);
                }
                for (const auto& c : s.body) statement(c);
                for (const auto& c : s.else_body) statement(c);
                break;
            }
        }
    }

    auto type_of(const Expr& e) -> std::string {
        switch (e.kind) {
            case ExprKind::int_literal: return "int";
            case ExprKind::bool_literal: return "bool";
            case ExprKind::string_literal: return "String";
            case ExprKind::name: {
                auto it = decl_types_.find(next_target());
                return it == decl_types_.end() ? error_type : it->second;
            }
            case ExprKind::call: return call_type(e);
            case ExprKind::binary: return binary_type(e);
        }
        return error_type;
    }

    auto call_type(const Expr& e) -> std::string {
        auto target = next_target();
        std::vector<std::string> args;
        for (const auto& a : e.operands) args.push_back(type_of(a));
        auto it = methods_.find(target);
        if (it == methods_.end()) return error_type;
        const auto& m = *it->second;
        if (m.params.size() != args.size()) {
            error(e.span, "arity-mismatch",
                  "method '" + m.name + "' expects " + std::to_string(m.params.size()) + " argument(s) but got " +
                      std::to_string(args.size()));
            return m.return_type.name;
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
            const auto& want = m.params[i].type.name;
            if (args[i] != error_type && args[i] != want) {
                error(e.operands[i].span, "type-mismatch",
                      "argument " + std::to_string(i + 1) + " of '" + m.name + "' expects " + want + " but found " +
                          args[i]);
            }
        }
        return m.return_type.name;
    }

    auto binary_type(const Expr& e) -> std::string {
        auto lhs = type_of(e.operands[0]);
        auto rhs = type_of(e.operands[1]);
        if (lhs == error_type || rhs == error_type) return error_type;
        auto mismatch = [&](const char* want) {
            error(e.span, "type-mismatch",
                  std::string("operator ") + std::string(to_string(e.op)) + " expects " + want + " operands but found " +
                      lhs + " and " + rhs);
            return error_type;
        };
        switch (e.op) {
            case BinaryOp::add:
                if (lhs == "int" && rhs == "int") return "int";
                if ((lhs == "String" || rhs == "String") && lhs != "void" && rhs != "void") return "String";
                return mismatch("int or String");
            case BinaryOp::sub:
            case BinaryOp::mul:
            case BinaryOp::div:
                if (lhs == "int" && rhs == "int") return "int";
                return mismatch("int");
            case BinaryOp::less:
                if (lhs == "int" && rhs == "int") return "bool";
                return mismatch("int");
            case BinaryOp::equal:
                if (lhs == rhs && lhs != "void") return "bool";
                return mismatch("matching");
            case BinaryOp::logical_and:
            case BinaryOp::logical_or:
                if (lhs == "bool" && rhs == "bool") return "bool";
                return mismatch("bool");
        }
        return error_type;
    }

    const BindingTable& bindings_;
    BuildReport& out_;
    std::unordered_map<ElementId, std::string> decl_types_;
    std::unordered_map<ElementId, const Method*> methods_;
    const Method* method_ = nullptr;
    ElementId from_ = no_element;
    std::uint32_t ordinal_ = 0;
};

}  // namespace

auto type_check(const Ast& ast, const BindingTable& bindings) -> BuildReport {
    BuildReport report;
    TypeChecker checker(ast, bindings, report);
    checker.run(ast);
    sort_errors(report.errors);
    report.buildable = report.errors.empty();
    return report;
}

}  // namespace ssd
