#include <ssd/sim/baseline.hpp>

#include <algorithm>
#include <set>
#include <unordered_map>
#include <variant>

namespace ssd::sim {

namespace {

using NodePtr = std::variant<const ClassDecl*, const Field*, const Method*, const Param*, const Stmt*>;
using NodeIndex = std::unordered_map<ElementId, NodePtr>;

auto index_nodes(const Ast& ast) -> NodeIndex {
    NodeIndex out;
    for_each_element(ast, [&](const auto& node, ElementId) { out.emplace(node.id, NodePtr{&node}); });
    return out;
}

auto merge_list(const std::vector<ElementId>& base, const std::vector<ElementId>& mine,
                const std::vector<ElementId>& theirs) -> std::vector<ElementId> {
    std::set<ElementId> in_base(base.begin(), base.end());
    std::set<ElementId> in_mine(mine.begin(), mine.end());
    std::vector<ElementId> out;
    for (auto x : theirs) {
        if (!in_base.count(x) || in_mine.count(x)) out.push_back(x);
    }
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (in_base.count(mine[i])) continue;
        std::size_t pos = 0;
        for (std::size_t j = i; j-- > 0;) {
            auto it = std::find(out.begin(), out.end(), mine[j]);
            if (it != out.end()) {
                pos = static_cast<std::size_t>(it - out.begin()) + 1;
                break;
            }
        }
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), mine[i]);
    }
    return out;
}

struct Pick {
    const NodeIndex* side = nullptr;
    std::vector<std::vector<ElementId>> children;
};

class Assembler {
public:
    explicit Assembler(const std::unordered_map<ElementId, Pick>& picks) : picks_(picks) {}

    auto unit() const -> Ast {
        Ast out;
        for (auto id : picks_.at(no_element).children.at(0)) out.classes.push_back(build_class(id));
        return out;
    }

private:
    template <typename T>
    auto node(ElementId id) const -> const T& {
        const auto& p = picks_.at(id);
        return *std::get<const T*>(p.side->at(id));
    }

    auto build_class(ElementId id) const -> ClassDecl {
        const auto& src = node<ClassDecl>(id);
        ClassDecl c;
        c.id = id;
        c.name = src.name;
        const auto& kids = picks_.at(id).children;
        for (auto f : kids.at(0)) c.fields.push_back(node<Field>(f));
        for (auto m : kids.at(1)) c.methods.push_back(build_method(m));
        return c;
    }

    auto build_method(ElementId id) const -> Method {
        const auto& src = node<Method>(id);
        Method m;
        m.id = id;
        m.return_type = src.return_type;
        m.name = src.name;
        const auto& kids = picks_.at(id).children;
        for (auto p : kids.at(0)) m.params.push_back(node<Param>(p));
        for (auto s : kids.at(1)) m.body.push_back(build_stmt(s));
        return m;
    }

    auto build_stmt(ElementId id) const -> Stmt {
        Stmt s = node<Stmt>(id);
        bool had_else = s.has_else;
        s.body.clear();
        s.else_body.clear();
        const auto& kids = picks_.at(id).children;
        for (auto c : kids.at(0)) s.body.push_back(build_stmt(c));
        for (auto c : kids.at(1)) s.else_body.push_back(build_stmt(c));
        s.has_else = had_else || !s.else_body.empty();
        return s;
    }

    const std::unordered_map<ElementId, Pick>& picks_;
};

}  // namespace

auto three_way_merge(const Ast& base, const Ast& mine, const Ast& theirs) -> MergeResult {
    auto cb = element_contents(base);
    auto cm = element_contents(mine);
    auto ct = element_contents(theirs);
    auto nm = index_nodes(mine);
    auto nt = index_nodes(theirs);
    auto base_names = ElementTable::from(base);
    auto mine_names = ElementTable::from(mine);

    std::set<ElementId> ids;
    for (const auto* c : {&cb, &cm, &ct}) {
        for (const auto& [id, _] : *c) ids.insert(id);
    }

    MergeResult result;
    auto conflict = [&](ElementId id, const char* reason) {
        const auto* info = base_names.find(id);
        if (!info) info = mine_names.find(id);
        result.conflicts.push_back({id, info ? info->qualified_name : "#" + std::to_string(id), reason});
    };

    std::unordered_map<ElementId, Pick> picks;
    for (auto id : ids) {
        auto b = cb.find(id);
        auto m = cm.find(id);
        auto t = ct.find(id);
        bool has_b = b != cb.end(), has_m = m != cm.end(), has_t = t != ct.end();
        if (!has_b) {
            if (has_m) {
                picks[id] = {&nm, m->second.children};
            } else {
                picks[id] = {&nt, t->second.children};
            }
            continue;
        }
        if (!has_m && !has_t) continue;
        if (!has_m) {
            if (!(t->second == b->second)) conflict(id, "delete-modify");
            continue;
        }
        if (!has_t) {
            if (!(m->second == b->second)) conflict(id, "modify-delete");
            continue;
        }
        const auto& bh = b->second.header;
        const auto& mh = m->second.header;
        const auto& th = t->second.header;
        Pick pick;
        if (mh == bh) {
            pick.side = &nt;
        } else if (th == bh || th == mh) {
            pick.side = &nm;
        } else {
            conflict(id, "divergent");
            continue;
        }
        for (std::size_t i = 0; i < b->second.children.size(); ++i) {
            pick.children.push_back(merge_list(b->second.children[i], m->second.children[i], t->second.children[i]));
        }
        picks[id] = std::move(pick);
    }
    if (result.conflicts.empty()) result.merged = Assembler(picks).unit();
    return result;
}

auto to_string(CheckinOutcome outcome) -> std::string_view {
    switch (outcome) {
    case CheckinOutcome::noop: return "noop";
    case CheckinOutcome::fast_forward: return "fast_forward";
    case CheckinOutcome::merged: return "merged";
    case CheckinOutcome::conflict: return "conflict";
    case CheckinOutcome::unbuildable: return "unbuildable";
    }
    return "?";
}

BaselineRepo::BaselineRepo(const Ast& project) {
    Ast tree = project;
    ElementId max = 0;
    for_each_element(tree, [&](const auto& node, ElementId) { max = std::max(max, node.id); });
    number_elements(tree, max + 1);
    max = 0;
    for_each_element(tree, [&](const auto& node, ElementId) { max = std::max(max, node.id); });
    ids_ = IdAllocator(max + 1);
    central_ = View::build(std::move(tree), "central@v1");
}

void BaselineRepo::add_developer(const std::string& name) { copies_.emplace(name, Copy{central_, central_}); }

auto BaselineRepo::copy(const std::string& developer) -> Copy& {
    auto it = copies_.find(developer);
    if (it == copies_.end()) throw KernelError("unknown-developer", "unknown developer '" + developer + "'");
    return it->second;
}

auto BaselineRepo::working(const std::string& developer) const -> const View& {
    auto it = copies_.find(developer);
    if (it == copies_.end()) throw KernelError("unknown-developer", "unknown developer '" + developer + "'");
    return *it->second.work;
}

auto BaselineRepo::apply(const std::string& developer, EditOp op) -> ApplyOutcome {
    auto& c = copy(developer);
    op.created.clear();
    if (op.target == no_element && op.kind != OpKind::create_class) {
        auto id = c.work->elements.lookup(op.target_name);
        if (!id) throw OpError("unknown-element", "no element named '" + op.target_name + "'");
        op.target = *id;
    }
    Ast tree = c.work->tree;
    auto outcome = apply_op(tree, c.work->bindings, op, ids_);
    c.work = View::build(std::move(tree), developer + "@work");
    return outcome;
}

auto BaselineRepo::checkin(const std::string& developer) -> CheckinResult {
    auto& c = copy(developer);
    CheckinResult r;
    if (c.work->text == c.base->text) {
        c.base = c.work = central_;
        r.version = version_;
        return r;
    }
    if (!c.work->report.buildable) {
        r.outcome = CheckinOutcome::unbuildable;
        r.version = version_;
        return r;
    }
    if (c.base == central_) {
        central_ = c.work;
        c.base = central_;
        r.outcome = CheckinOutcome::fast_forward;
        r.version = ++version_;
        return r;
    }
    ++merges_;
    auto merge = three_way_merge(c.base->tree, c.work->tree, central_->tree);
    r.conflicts = std::move(merge.conflicts);
    if (merge.merged) {
        auto merged = View::build(std::move(*merge.merged), "central@v" + std::to_string(version_ + 1));
        if (merged->report.buildable) {
            central_ = merged;
            c.base = c.work = central_;
            r.outcome = CheckinOutcome::merged;
            r.version = ++version_;
            return r;
        }
        r.conflicts.push_back({no_element, "<build>", "build"});
    }
    ++conflicts_;
    c.base = c.work = central_;
    r.outcome = CheckinOutcome::conflict;
    r.version = version_;
    return r;
}

void BaselineRepo::revert(const std::string& developer) {
    auto& c = copy(developer);
    c.base = c.work = central_;
}

}  // namespace ssd::sim
