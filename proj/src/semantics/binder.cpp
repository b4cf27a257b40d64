#include <ssd/semantics/semantics.hpp>

#include <ssd/minilang/parser.hpp>

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace ssd {

namespace {

enum class MemberKind { field, method };

struct Member {
    ElementId id;
    MemberKind kind;
};

class Binder {
public:
    explicit Binder(BindResult& out) : out_(out) {}

    void run(const Ast& ast) {
        for (const auto& c : ast.classes) {
            require_id(c.id);
            if (c.name == "String") {
                error(c.name_span, "duplicate-declaration", "class '" + c.name + "' shadows a builtin type");
            } else if (!out_.table.classes.emplace(c.name, c.id).second) {
                error(c.name_span, "duplicate-declaration", "duplicate declaration of class '" + c.name + "'");
            }
        }
        for (const auto& c : ast.classes) bind_class(c);
        std::sort(out_.table.refs.begin(), out_.table.refs.end(), [](const RefSite& a, const RefSite& b) {
            return std::tie(a.from, a.ordinal) < std::tie(b.from, b.ordinal);
        });
    }

private:
    void require_id(ElementId id) {
        if (id == no_element) throw std::invalid_argument("bind: tree has unnumbered elements");
    }

    void error(Span span, std::string code, std::string message) {
        out_.errors.push_back({span, std::move(code), std::move(message)});
    }

    void check_value_type(const TypeRef& t) {
        if (t.name == "void") error(t.span, "unknown-type", "'void' is not a value type");
    }

    void bind_class(const ClassDecl& c) {
        members_.clear();
        auto& scope = out_.table.class_scopes[c.id];
        auto declare = [&](const std::string& name, Span span, ElementId id, MemberKind kind) {
            require_id(id);
            if (!members_.emplace(name, Member{id, kind}).second) {
                error(span, "duplicate-declaration", "duplicate declaration of member '" + name + "'");
                return;
            }
            scope.emplace(name, id);
        };
        for (const auto& f : c.fields) declare(f.name, f.name_span, f.id, MemberKind::field);
        for (const auto& m : c.methods) declare(m.name, m.name_span, m.id, MemberKind::method);

        for (const auto& f : c.fields) {
            check_value_type(f.type);
            scopes_.clear();
            params_ = nullptr;
            resolve_own(f, f.id);
        }
        for (const auto& m : c.methods) bind_method(m);
    }

    void bind_method(const Method& m) {
        auto& mscope = out_.table.method_scopes[m.id];
        resolve_own(m, m.id);
        std::map<std::string, ElementId> params;
        for (const auto& p : m.params) {
            require_id(p.id);
            check_value_type(p.type);
            resolve_own(p, p.id);
            if (!params.emplace(p.name, p.id).second) {
                error(p.name_span, "duplicate-declaration", "duplicate parameter '" + p.name + "'");
            } else {
                mscope.emplace_back(p.name, p.id);
            }
        }
        params_ = &params;
        scopes_.clear();
        bind_block(m.body, mscope);
        params_ = nullptr;
    }

    void bind_block(const std::vector<Stmt>& stmts, std::vector<std::pair<std::string, ElementId>>& mscope) {
        scopes_.emplace_back();
        for (const auto& s : stmts) {
            require_id(s.id);
            resolve_own(s, s.id);
            if (s.kind == StmtKind::var_decl) {
                check_value_type(s.type);
                if (lookup_local(s.name) || (params_ && params_->count(s.name))) {
                    error(s.name_span, "duplicate-declaration", "duplicate local variable '" + s.name + "'");
                } else {
                    scopes_.back().emplace(s.name, s.id);
                    mscope.emplace_back(s.name, s.id);
                }
            }
            if (s.kind == StmtKind::if_stmt || s.kind == StmtKind::while_stmt) {
                bind_block(s.body, mscope);
                if (s.has_else) bind_block(s.else_body, mscope);
            }
        }
        scopes_.pop_back();
    }

    auto lookup_local(const std::string& name) const -> std::optional<ElementId> {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            if (auto f = it->find(name); f != it->end()) return f->second;
        }
        return std::nullopt;
    }

    template <typename Node>
    void resolve_own(const Node& node, ElementId from) {
        std::uint32_t ordinal = 0;
        for_each_own_ref(node, [&](RefKind kind, const std::string& name, Span span) {
            auto target = resolve(kind, name, span);
            if (target) out_.table.refs.push_back({from, ordinal, kind, name, span, *target});
            ++ordinal;
        });
    }

    auto resolve(RefKind kind, const std::string& name, Span span) -> std::optional<ElementId> {
        switch (kind) {
            case RefKind::type_name: {
                auto it = out_.table.classes.find(name);
                if (it != out_.table.classes.end()) return it->second;
                error(span, "unknown-type", "unknown type '" + name + "'");
                return std::nullopt;
            }
            case RefKind::identifier: {
                if (auto local = lookup_local(name)) return local;
                if (params_) {
                    if (auto it = params_->find(name); it != params_->end()) return it->second;
                }
                if (auto it = members_.find(name); it != members_.end() && it->second.kind == MemberKind::field) {
                    return it->second.id;
                }
                error(span, "unresolved-identifier", "cannot resolve identifier '" + name + "'");
                return std::nullopt;
            }
            case RefKind::call: {
                if (auto it = members_.find(name); it != members_.end() && it->second.kind == MemberKind::method) {
                    return it->second.id;
                }
                error(span, "unresolved-call", "cannot resolve method '" + name + "'");
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    BindResult& out_;
    std::map<std::string, Member> members_;
    std::vector<std::map<std::string, ElementId>> scopes_;
    const std::map<std::string, ElementId>* params_ = nullptr;
};

}  // namespace

auto BindingTable::find(ElementId from, std::uint32_t ordinal) const -> const RefSite* {
    auto it = std::lower_bound(refs.begin(), refs.end(), std::make_pair(from, ordinal),
                               [](const RefSite& s, const std::pair<ElementId, std::uint32_t>& key) {
                                   return std::tie(s.from, s.ordinal) < std::tie(key.first, key.second);
                               });
    if (it == refs.end() || it->from != from || it->ordinal != ordinal) return nullptr;
    return &*it;
}

auto BindingTable::sites_targeting(ElementId declaration) const -> std::vector<const RefSite*> {
    std::vector<const RefSite*> out;
    for (const auto& r : refs) {
        if (r.target == declaration) out.push_back(&r);
    }
    return out;
}

auto bind(const Ast& ast) -> BindResult {
    BindResult result;
    Binder(result).run(ast);
    sort_errors(result.errors);
    return result;
}

void sort_errors(std::vector<BuildError>& errors) {
    std::stable_sort(errors.begin(), errors.end(), [](const BuildError& a, const BuildError& b) {
        return std::tie(a.span.begin, a.code) < std::tie(b.span.begin, b.code);
    });
}

auto build_gate(const Ast& ast, std::string version_label) -> GateResult {
    GateResult gate;
    auto bound = bind(ast);
    gate.bindings = std::move(bound.table);
    if (!bound.errors.empty()) {
        gate.report.errors = std::move(bound.errors);
    } else {
        gate.report = type_check(ast, gate.bindings);
    }
    sort_errors(gate.report.errors);
    gate.report.buildable = gate.report.errors.empty();
    gate.report.version_checked = std::move(version_label);
    return gate;
}

auto number_elements(Ast& ast, ElementId first) -> ElementId {
    auto next = first;
    for_each_element(ast, [&](auto& node, ElementId) {
        if (node.id == no_element) node.id = next++;
    });
    return next;
}

auto check_source(const SourceText& src) -> CheckOutcome {
    CheckOutcome out;
    auto parsed = parse_unit(src);
    if (!parsed) {
        for (auto& d : parsed.diagnostics) out.gate.report.errors.push_back({d.span, d.code, d.message});
        out.gate.report.buildable = false;
        out.gate.report.version_checked = src.origin;
        return out;
    }
    number_elements(*parsed.value);
    out.gate = build_gate(*parsed.value, src.origin);
    out.ast = std::move(parsed.value);
    return out;
}

}  // namespace ssd
