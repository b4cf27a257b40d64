#include <ssd/kernel/edit_op.hpp>

#include <ssd/minilang/parser.hpp>

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <utility>

namespace ssd {

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 18> op_names{{
    {OpKind::create_class, "create_class"},
    {OpKind::rename_class, "rename_class"},
    {OpKind::delete_class, "delete_class"},
    {OpKind::add_field, "add_field"},
    {OpKind::rename_field, "rename_field"},
    {OpKind::set_field_type, "set_field_type"},
    {OpKind::set_field_init, "set_field_init"},
    {OpKind::add_method, "add_method"},
    {OpKind::rename_method, "rename_method"},
    {OpKind::set_return_type, "set_return_type"},
    {OpKind::delete_method, "delete_method"},
    {OpKind::add_param, "add_param"},
    {OpKind::rename_param, "rename_param"},
    {OpKind::set_param_type, "set_param_type"},
    {OpKind::remove_param, "remove_param"},
    {OpKind::insert_statement, "insert_statement"},
    {OpKind::replace_statement, "replace_statement"},
    {OpKind::delete_statement, "delete_statement"},
}};

[[noreturn]] void malformed(const std::string& message) { throw OpError("malformed-op", message); }

/// Where an element lives in the tree.
struct Location {
    ElementKind kind = ElementKind::class_decl;
    std::size_t class_index = 0;
    ClassDecl* cls = nullptr;
    Method* method = nullptr;
    std::size_t index = 0;               // position among same-kind siblings
    std::vector<Stmt>* stmts = nullptr;  // owning list, statements only
};

auto find_in_stmts(std::vector<Stmt>& list, ElementId id, Location& loc) -> bool {
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].id == id) {
            loc.kind = ElementKind::statement;
            loc.stmts = &list;
            loc.index = i;
            return true;
        }
        if (find_in_stmts(list[i].body, id, loc) || find_in_stmts(list[i].else_body, id, loc)) return true;
    }
    return false;
}

auto locate(Ast& tree, ElementId id) -> std::optional<Location> {
    if (id == no_element) return std::nullopt;
    for (std::size_t ci = 0; ci < tree.classes.size(); ++ci) {
        auto& c = tree.classes[ci];
        Location loc;
        loc.class_index = ci;
        loc.cls = &c;
        if (c.id == id) {
            loc.kind = ElementKind::class_decl;
            return loc;
        }
        for (std::size_t fi = 0; fi < c.fields.size(); ++fi) {
            if (c.fields[fi].id == id) {
                loc.kind = ElementKind::field;
                loc.index = fi;
                return loc;
            }
        }
        for (std::size_t mi = 0; mi < c.methods.size(); ++mi) {
            auto& m = c.methods[mi];
            loc.method = &m;
            if (m.id == id) {
                loc.kind = ElementKind::method;
                loc.index = mi;
                return loc;
            }
            for (std::size_t pi = 0; pi < m.params.size(); ++pi) {
                if (m.params[pi].id == id) {
                    loc.kind = ElementKind::param;
                    loc.index = pi;
                    return loc;
                }
            }
            if (find_in_stmts(m.body, id, loc)) return loc;
        }
    }
    return std::nullopt;
}

auto require(Ast& tree, ElementId id, ElementKind kind, OpKind op) -> Location {
    auto loc = locate(tree, id);
    if (!loc) throw OpError("unknown-element", "unknown element #" + std::to_string(id));
    if (loc->kind != kind) {
        malformed(std::string(to_string(op)) + " expects a " + std::string(to_string(kind)) + ", #" +
                  std::to_string(id) + " is a " + std::string(to_string(loc->kind)));
    }
    return *loc;
}

auto single_token(std::string_view text) -> std::optional<Token> {
    auto toks = tokenize(text);
    if (!toks || toks.value->size() != 2) return std::nullopt;
    return toks.value->front();
}

void check_name(const std::string& name) {
    auto tok = single_token(name);
    if (!tok || tok->kind != TokenKind::identifier) malformed("'" + name + "' is not an identifier");
}

void check_type(const std::string& type, bool allow_void) {
    auto tok = single_token(type);
    bool ok = tok && (tok->kind == TokenKind::identifier ||
                      (tok->kind == TokenKind::keyword &&
                       (tok->text == "int" || tok->text == "bool" || (allow_void && tok->text == "void"))));
    if (!ok) malformed("'" + type + "' is not a type name");
}

/// Hands out ids for created elements: fresh on first application, the
/// recorded ones on replay.
class Creator {
public:
    Creator(EditOp& op, IdAllocator& ids) : op_(op), ids_(ids), replay_(!op.created.empty()) {}

    auto next() -> ElementId {
        if (!replay_) {
            auto id = ids_.allocate();
            op_.created.push_back(id);
            made_.push_back(id);
            return id;
        }
        if (cursor_ >= op_.created.size()) malformed("replayed op creates more elements than recorded");
        made_.push_back(op_.created[cursor_]);
        return op_.created[cursor_++];
    }

    auto finish() -> std::vector<ElementId> {
        if (replay_ && cursor_ != op_.created.size()) malformed("replayed op creates fewer elements than recorded");
        return made_;
    }

private:
    EditOp& op_;
    IdAllocator& ids_;
    bool replay_;
    std::size_t cursor_ = 0;
    std::vector<ElementId> made_;
};

void number_stmt(Stmt& s, Creator& ids) {
    s.id = ids.next();
    for (auto& c : s.body) number_stmt(c, ids);
    for (auto& c : s.else_body) number_stmt(c, ids);
}

void collect_stmt_ids(const Stmt& s, std::vector<ElementId>& out) {
    out.push_back(s.id);
    for (const auto& c : s.body) collect_stmt_ids(c, out);
    for (const auto& c : s.else_body) collect_stmt_ids(c, out);
}

auto subtree_ids(const ClassDecl& c) -> std::vector<ElementId> {
    std::vector<ElementId> out{c.id};
    for (const auto& f : c.fields) out.push_back(f.id);
    for (const auto& m : c.methods) {
        for_each_element_in(m, [&](const auto& node, ElementId) { out.push_back(node.id); });
    }
    return out;
}

auto subtree_ids(const Method& m) -> std::vector<ElementId> {
    std::vector<ElementId> out;
    for_each_element_in(m, [&](const auto& node, ElementId) { out.push_back(node.id); });
    return out;
}

auto parse_stmt_text(const std::string& text) -> Stmt {
    auto parsed = parse_statement(SourceText{text, "<op>"});
    if (!parsed) malformed("statement does not parse: " + parsed.diagnostics.front().message);
    return std::move(*parsed.value);
}

auto parse_expr_text(const std::string& text) -> Expr {
    auto parsed = parse_expression(SourceText{text, "<op>"});
    if (!parsed) malformed("expression does not parse: " + parsed.diagnostics.front().message);
    return std::move(*parsed.value);
}

/// Rewrites every reference site bound to `declaration` to `new_name` and
/// returns the owning elements.
auto cascade_rename(Ast& tree, const BindingTable& bindings, ElementId declaration, const std::string& new_name)
    -> std::vector<ElementId> {
    std::map<ElementId, std::set<std::uint32_t>> wanted;
    for (const auto* site : bindings.sites_targeting(declaration)) wanted[site->from].insert(site->ordinal);
    std::vector<ElementId> owners;
    if (wanted.empty()) return owners;
    for_each_element(tree, [&](auto& node, ElementId) {
        auto it = wanted.find(node.id);
        if (it == wanted.end()) return;
        std::uint32_t ordinal = 0;
        for_each_own_ref(node, [&](RefKind, std::string& name, Span) {
            if (it->second.count(ordinal)) name = new_name;
            ++ordinal;
        });
        owners.push_back(node.id);
    });
    return owners;
}

/// Owners of every site bound to any element in `declarations`.
auto referencing(const BindingTable& bindings, const std::vector<ElementId>& declarations)
    -> std::vector<ElementId> {
    std::set<ElementId> decl(declarations.begin(), declarations.end());
    std::vector<ElementId> out;
    for (const auto& site : bindings.refs) {
        if (decl.count(site.target)) out.push_back(site.from);
    }
    return out;
}

auto block_of(Stmt& s, const std::string& block) -> std::vector<Stmt>& {
    if (s.kind == StmtKind::if_stmt) {
        if (block == "then" || block.empty()) return s.body;
        if (block == "else") {
            s.has_else = true;
            return s.else_body;
        }
    } else if (s.kind == StmtKind::while_stmt && (block == "body" || block.empty())) {
        return s.body;
    }
    malformed("statement #" + std::to_string(s.id) + " has no '" + block + "' block");
}

}  // namespace

auto to_string(OpKind kind) -> std::string_view {
    for (const auto& [k, name] : op_names) {
        if (k == kind) return name;
    }
    return "?";
}

auto op_kind_from_string(std::string_view name) -> std::optional<OpKind> {
    for (const auto& [k, n] : op_names) {
        if (n == name) return k;
    }
    return std::nullopt;
}

auto apply_op(Ast& tree, const BindingTable& bindings, EditOp& op, IdAllocator& ids) -> ApplyOutcome {
    ApplyOutcome out;
    Creator creator(op, ids);
    std::vector<ElementId> touched;
    auto add = [&](const std::vector<ElementId>& more) { touched.insert(touched.end(), more.begin(), more.end()); };

    switch (op.kind) {
    case OpKind::create_class: {
        check_name(op.name);
        ClassDecl c;
        c.name = op.name;
        c.id = creator.next();
        tree.classes.push_back(std::move(c));
        break;
    }
    case OpKind::rename_class: {
        check_name(op.name);
        auto loc = require(tree, op.target, ElementKind::class_decl, op.kind);
        add(cascade_rename(tree, bindings, op.target, op.name));
        tree.classes[loc.class_index].name = op.name;
        touched.push_back(op.target);
        break;
    }
    case OpKind::delete_class: {
        auto loc = require(tree, op.target, ElementKind::class_decl, op.kind);
        out.deleted = subtree_ids(*loc.cls);
        add(out.deleted);
        add(referencing(bindings, out.deleted));
        tree.classes.erase(tree.classes.begin() + static_cast<std::ptrdiff_t>(loc.class_index));
        break;
    }
    case OpKind::add_field: {
        check_name(op.name);
        check_type(op.type, false);
        auto loc = require(tree, op.target, ElementKind::class_decl, op.kind);
        Field f;
        f.type.name = op.type;
        f.name = op.name;
        if (!op.text.empty()) f.init = parse_expr_text(op.text);
        f.id = creator.next();
        loc.cls->fields.push_back(std::move(f));
        out.anchor = op.target;
        break;
    }
    case OpKind::rename_field: {
        check_name(op.name);
        auto loc = require(tree, op.target, ElementKind::field, op.kind);
        add(cascade_rename(tree, bindings, op.target, op.name));
        loc.cls->fields[loc.index].name = op.name;
        touched.push_back(op.target);
        break;
    }
    case OpKind::set_field_type: {
        check_type(op.type, false);
        auto loc = require(tree, op.target, ElementKind::field, op.kind);
        loc.cls->fields[loc.index].type = TypeRef{op.type, {}};
        touched.push_back(op.target);
        break;
    }
    case OpKind::set_field_init: {
        auto loc = require(tree, op.target, ElementKind::field, op.kind);
        auto& f = loc.cls->fields[loc.index];
        if (op.text.empty()) {
            f.init.reset();
        } else {
            f.init = parse_expr_text(op.text);
        }
        touched.push_back(op.target);
        break;
    }
    case OpKind::add_method: {
        check_name(op.name);
        check_type(op.type, true);
        auto loc = require(tree, op.target, ElementKind::class_decl, op.kind);
        auto params = parse_params(SourceText{op.text, "<op>"});
        if (!params) malformed("parameter list does not parse: " + params.diagnostics.front().message);
        Method m;
        m.return_type.name = op.type;
        m.name = op.name;
        m.id = creator.next();
        m.params = std::move(*params.value);
        for (auto& p : m.params) p.id = creator.next();
        loc.cls->methods.push_back(std::move(m));
        out.anchor = op.target;
        break;
    }
    case OpKind::rename_method: {
        check_name(op.name);
        auto loc = require(tree, op.target, ElementKind::method, op.kind);
        add(cascade_rename(tree, bindings, op.target, op.name));
        loc.method->name = op.name;
        touched.push_back(op.target);
        break;
    }
    case OpKind::set_return_type: {
        check_type(op.type, true);
        auto loc = require(tree, op.target, ElementKind::method, op.kind);
        loc.method->return_type = TypeRef{op.type, {}};
        touched.push_back(op.target);
        break;
    }
    case OpKind::delete_method: {
        auto loc = require(tree, op.target, ElementKind::method, op.kind);
        out.deleted = subtree_ids(*loc.method);
        add(out.deleted);
        add(referencing(bindings, out.deleted));
        loc.cls->methods.erase(loc.cls->methods.begin() + static_cast<std::ptrdiff_t>(loc.index));
        break;
    }
    case OpKind::add_param: {
        check_name(op.name);
        check_type(op.type, false);
        auto loc = require(tree, op.target, ElementKind::method, op.kind);
        auto& params = loc.method->params;
        auto at = op.index.value_or(params.size());
        if (at > params.size()) malformed("parameter index out of range");
        Param p;
        p.type.name = op.type;
        p.name = op.name;
        p.id = creator.next();
        params.insert(params.begin() + static_cast<std::ptrdiff_t>(at), std::move(p));
        touched.push_back(op.target);
        break;
    }
    case OpKind::rename_param: {
        check_name(op.name);
        auto loc = require(tree, op.target, ElementKind::param, op.kind);
        add(cascade_rename(tree, bindings, op.target, op.name));
        loc.method->params[loc.index].name = op.name;
        touched.push_back(op.target);
        break;
    }
    case OpKind::set_param_type: {
        check_type(op.type, false);
        auto loc = require(tree, op.target, ElementKind::param, op.kind);
        loc.method->params[loc.index].type = TypeRef{op.type, {}};
        touched.push_back(op.target);
        break;
    }
    case OpKind::remove_param: {
        auto loc = require(tree, op.target, ElementKind::param, op.kind);
        out.deleted = {op.target};
        add(out.deleted);
        add(referencing(bindings, out.deleted));
        touched.push_back(loc.method->id);
        auto& params = loc.method->params;
        params.erase(params.begin() + static_cast<std::ptrdiff_t>(loc.index));
        break;
    }
    case OpKind::insert_statement: {
        auto loc = locate(tree, op.target);
        if (!loc) throw OpError("unknown-element", "unknown element #" + std::to_string(op.target));
        std::vector<Stmt>* list = nullptr;
        if (loc->kind == ElementKind::method) {
            if (!op.block.empty() && op.block != "body") malformed("a method has only a 'body' block");
            list = &loc->method->body;
        } else if (loc->kind == ElementKind::statement) {
            list = &block_of((*loc->stmts)[loc->index], op.block);
        } else {
            malformed("insert_statement expects a method or statement parent");
        }
        auto at = op.index.value_or(list->size());
        if (at > list->size()) malformed("statement index out of range");
        auto stmt = parse_stmt_text(op.text);
        number_stmt(stmt, creator);
        list->insert(list->begin() + static_cast<std::ptrdiff_t>(at), std::move(stmt));
        touched.push_back(loc->method->id);
        break;
    }
    case OpKind::replace_statement: {
        auto loc = require(tree, op.target, ElementKind::statement, op.kind);
        auto& slot = (*loc.stmts)[loc.index];
        std::vector<ElementId> old_ids;
        collect_stmt_ids(slot, old_ids);
        out.deleted.assign(old_ids.begin() + 1, old_ids.end());
        add(out.deleted);
        add(referencing(bindings, out.deleted));
        auto stmt = parse_stmt_text(op.text);
        stmt.id = op.target;
        for (auto& c : stmt.body) number_stmt(c, creator);
        for (auto& c : stmt.else_body) number_stmt(c, creator);
        slot = std::move(stmt);
        touched.push_back(op.target);
        break;
    }
    case OpKind::delete_statement: {
        auto loc = require(tree, op.target, ElementKind::statement, op.kind);
        collect_stmt_ids((*loc.stmts)[loc.index], out.deleted);
        add(out.deleted);
        add(referencing(bindings, out.deleted));
        touched.push_back(loc.method->id);
        loc.stmts->erase(loc.stmts->begin() + static_cast<std::ptrdiff_t>(loc.index));
        break;
    }
    }

    out.created = creator.finish();
    add(out.created);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    out.touched = std::move(touched);
    return out;
}

auto to_json(const EditOp& op) -> nlohmann::json {
    nlohmann::json j;
    j["kind"] = std::string(to_string(op.kind));
    if (op.target != no_element) j["target"] = op.target;
    if (!op.target_name.empty()) j["target_name"] = op.target_name;
    if (!op.name.empty()) j["name"] = op.name;
    if (!op.type.empty()) j["type"] = op.type;
    if (!op.text.empty()) j["text"] = op.text;
    if (op.index) j["index"] = *op.index;
    if (!op.block.empty()) j["block"] = op.block;
    if (!op.created.empty()) j["created"] = op.created;
    return j;
}

auto edit_op_from_json(const nlohmann::json& j) -> EditOp {
    if (!j.is_object()) malformed("op must be an object");
    EditOp op;
    try {
        auto kind = op_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) malformed("unknown op kind '" + j.at("kind").get<std::string>() + "'");
        op.kind = *kind;
        if (j.contains("target")) op.target = j["target"].get<ElementId>();
        if (j.contains("target_name")) op.target_name = j["target_name"].get<std::string>();
        if (j.contains("name")) op.name = j["name"].get<std::string>();
        if (j.contains("type")) op.type = j["type"].get<std::string>();
        if (j.contains("text")) op.text = j["text"].get<std::string>();
        if (j.contains("index")) op.index = j["index"].get<std::size_t>();
        if (j.contains("block")) op.block = j["block"].get<std::string>();
        if (j.contains("created")) op.created = j["created"].get<std::vector<ElementId>>();
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("bad op field: ") + e.what());
    }
    return op;
}

}  // namespace ssd
