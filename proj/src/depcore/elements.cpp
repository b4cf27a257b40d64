#include <ssd/depcore/elements.hpp>

#include <ssd/minilang/printer.hpp>

#include <algorithm>

namespace ssd {

namespace {

class TableBuilder {
public:
    explicit TableBuilder(std::vector<ElementInfo>& out) : out_(out) {}

    void unit(const Ast& ast) {
        for (const auto& c : ast.classes) {
            push(c.id, ElementKind::class_decl, no_element, no_element, c.name, c.span);
            for (const auto& f : c.fields) {
                push(f.id, ElementKind::field, c.id, no_element, c.name + "." + f.name, f.span);
            }
            for (const auto& m : c.methods) {
                auto qname = c.name + "." + m.name;
                push(m.id, ElementKind::method, c.id, m.id, qname, m.span);
                for (const auto& p : m.params) {
                    push(p.id, ElementKind::param, m.id, m.id, qname + "." + p.name, p.span);
                }
                block(m.body, m.id, m.id, qname + "/body");
            }
        }
    }

private:
    void block(const std::vector<Stmt>& stmts, ElementId parent, ElementId method, const std::string& prefix) {
        for (std::size_t i = 0; i < stmts.size(); ++i) {
            const auto& s = stmts[i];
            auto qname = prefix + "[" + std::to_string(i) + "]";
            push(s.id, ElementKind::statement, parent, method, qname, s.span);
            if (s.kind == StmtKind::if_stmt) {
                block(s.body, s.id, method, qname + "/then");
                block(s.else_body, s.id, method, qname + "/else");
            } else if (s.kind == StmtKind::while_stmt) {
                block(s.body, s.id, method, qname + "/body");
            }
        }
    }

    void push(ElementId id, ElementKind kind, ElementId parent, ElementId method, std::string qname, Span span) {
        out_.push_back({id, kind, parent, method, std::move(qname), span});
    }

    std::vector<ElementInfo>& out_;
};

auto header_of(const Stmt& s) -> std::string {
    switch (s.kind) {
        case StmtKind::if_stmt:
            return "if (" + print_expression(*s.value) + (s.has_else ? ") else" : ")");
        case StmtKind::while_stmt:
            return "while (" + print_expression(*s.value) + ")";
        default:
            return print_statement(s);
    }
}

template <typename T>
auto ids(const std::vector<T>& items) -> std::vector<ElementId> {
    std::vector<ElementId> out;
    out.reserve(items.size());
    for (const auto& i : items) out.push_back(i.id);
    return out;
}

}  // namespace

auto ElementTable::from(const Ast& ast) -> ElementTable {
    ElementTable t;
    TableBuilder(t.elements_).unit(ast);
    t.by_id_.reserve(t.elements_.size());
    for (std::size_t i = 0; i < t.elements_.size(); ++i) {
        const auto& e = t.elements_[i];
        t.by_id_.emplace(e.id, i);
        t.by_name_.emplace(e.qualified_name, e.id);
    }
    return t;
}

auto ElementTable::find(ElementId id) const -> const ElementInfo* {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &elements_[it->second];
}

auto ElementTable::lookup(std::string_view qualified_name) const -> std::optional<ElementId> {
    auto it = by_name_.find(std::string(qualified_name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

auto ViewSet::find(ElementId id) const -> const ElementInfo* {
    for (const auto* t : tables_) {
        if (const auto* e = t->find(id)) return e;
    }
    return nullptr;
}

auto ViewSet::get(ElementId id) const -> const ElementInfo& {
    const auto* e = find(id);
    if (!e) throw UnknownElement(id);
    return *e;
}

auto ViewSet::all() const -> std::vector<const ElementInfo*> {
    std::unordered_map<ElementId, const ElementInfo*> seen;
    for (const auto* t : tables_) {
        for (const auto& e : t->elements()) seen.emplace(e.id, &e);
    }
    std::vector<const ElementInfo*> out;
    out.reserve(seen.size());
    for (const auto& [id, e] : seen) out.push_back(e);
    std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    return out;
}

auto element_contents(const Ast& ast) -> std::unordered_map<ElementId, ElementContent> {
    std::unordered_map<ElementId, ElementContent> out;
    out[no_element] = {ElementKind::class_decl, no_element, "unit", {ids(ast.classes)}};
    for_each_element(ast, [&](const auto& node, ElementId parent) {
        using N = std::remove_cvref_t<decltype(node)>;
        ElementContent c;
        c.kind = kind_of<N>();
        c.parent = parent;
        if constexpr (std::is_same_v<N, ClassDecl>) {
            c.header = "class " + node.name;
            c.children = {ids(node.fields), ids(node.methods)};
        } else if constexpr (std::is_same_v<N, Field>) {
            c.header = node.type.name + " " + node.name;
            if (node.init) c.header += " = " + print_expression(*node.init);
        } else if constexpr (std::is_same_v<N, Method>) {
            c.header = node.return_type.name + " " + node.name;
            c.children = {ids(node.params), ids(node.body)};
        } else if constexpr (std::is_same_v<N, Param>) {
            c.header = node.type.name + " " + node.name;
        } else {
            c.header = header_of(node);
            c.children = {ids(node.body), ids(node.else_body)};
        }
        out[node.id] = std::move(c);
    });
    return out;
}

}  // namespace ssd
