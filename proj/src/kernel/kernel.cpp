#include <ssd/kernel/kernel.hpp>

#include <ssd/minilang/parser.hpp>
#include <ssd/minilang/printer.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ssd {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> event_names{{
    {EventKind::lock_granted, "lock_granted"},
    {EventKind::lock_denied, "lock_denied"},
    {EventKind::edit_applied, "edit_applied"},
    {EventKind::build_status, "build_status"},
    {EventKind::committed, "committed"},
    {EventKind::reverted, "reverted"},
    {EventKind::mode_changed, "mode_changed"},
    {EventKind::reconcile_result, "reconcile_result"},
}};

auto trim(std::string_view s) -> std::string_view {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

auto max_id(const Ast& ast) -> ElementId {
    ElementId m = 0;
    for_each_element(ast, [&](const auto& node, ElementId) { m = std::max(m, node.id); });
    return m;
}

auto sorted(const std::set<ElementId>& s) -> std::vector<ElementId> { return {s.begin(), s.end()}; }

auto errors_json(const View& view) -> nlohmann::json {
    auto out = nlohmann::json::array();
    for (const auto& e : view.report.errors) {
        auto lc = line_col(view.text, e.span.begin);
        out.push_back({{"code", e.code}, {"message", e.message}, {"line", lc.line}, {"col", lc.column}});
    }
    return out;
}

auto rebind(Ast& tree) -> BindingTable {
    canonicalize(tree);
    return bind(tree).table;
}

}  // namespace

auto parse_config(std::string_view text) -> KernelConfig {
    KernelConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        auto where = "config line " + std::to_string(line_no);
        if (eq == std::string_view::npos) throw std::invalid_argument(where + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key == "auto_commit") {
            if (value == "true" || value == "1") {
                cfg.auto_commit = true;
            } else if (value == "false" || value == "0") {
                cfg.auto_commit = false;
            } else {
                throw std::invalid_argument(where + ": auto_commit must be true or false");
            }
        } else if (key == "lock_lease_ms") {
            std::int64_t v = -1;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || ptr != value.data() + value.size() || v < 0) {
                throw std::invalid_argument(where + ": lock_lease_ms must be a non-negative integer");
            }
            cfg.lock_lease_ms = v;
        } else {
            throw std::invalid_argument(where + ": unknown key '" + std::string(key) + "'");
        }
    }
    return cfg;
}

auto load_config(const std::filesystem::path& path) -> KernelConfig {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

auto View::build(Ast tree, std::string label) -> std::shared_ptr<const View> {
    auto v = std::make_shared<View>();
    v->text = canonicalize(tree);
    v->elements = ElementTable::from(tree);
    auto gate = build_gate(tree, std::move(label));
    v->bindings = std::move(gate.bindings);
    v->report = std::move(gate.report);
    v->tree = std::move(tree);
    return v;
}

auto to_string(Mode mode) -> std::string_view { return mode == Mode::on_record ? "on_record" : "off_record"; }

auto to_string(EventKind kind) -> std::string_view {
    for (const auto& [k, n] : event_names) {
        if (k == kind) return n;
    }
    return "?";
}

auto event_kind_from_string(std::string_view name) -> std::optional<EventKind> {
    for (const auto& [k, n] : event_names) {
        if (n == name) return k;
    }
    return std::nullopt;
}

auto to_json(const KernelEvent& event) -> nlohmann::json {
    auto j = event.details;
    j["t"] = std::string(to_string(event.kind));
    j["seq"] = event.seq;
    j["dev"] = event.developer;
    return j;
}

auto event_from_json(const nlohmann::json& j) -> KernelEvent {
    KernelEvent e;
    auto kind = event_kind_from_string(j.at("t").get<std::string>());
    if (!kind) throw std::invalid_argument("not a kernel event: " + j.at("t").get<std::string>());
    e.kind = *kind;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.developer = j.at("dev").get<std::string>();
    e.details = j;
    e.details.erase("t");
    e.details.erase("seq");
    e.details.erase("dev");
    return e;
}

Kernel::Kernel(Ast project, KernelConfig config) : config_(config) {
    number_elements(project, max_id(project) + 1);
    ids_ = IdAllocator(max_id(project) + 1);
    initial_ = project;
    snapshot_ = View::build(std::move(project), "v1");
    if (!snapshot_->report.buildable) {
        const auto& e = snapshot_->report.errors.front();
        throw KernelError("unbuildable-project", "project is not buildable: " + e.code + " " + e.message);
    }
}

auto Kernel::from_source(const SourceText& src, KernelConfig config) -> Kernel {
    auto parsed = parse_unit(src);
    if (!parsed) {
        const auto& d = parsed.diagnostics.front();
        throw KernelError("unbuildable-project", "project does not parse: " + d.code + " " + d.message);
    }
    return Kernel(std::move(*parsed.value), config);
}

void Kernel::add_developer(const std::string& name) {
    if (devs_.count(name)) return;
    Developer d;
    d.name = name;
    d.base_version = version_;
    d.view = snapshot_;
    devs_.emplace(name, std::move(d));
}

auto Kernel::developers() const -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& [name, _] : devs_) out.push_back(name);
    return out;
}

auto Kernel::dev(const std::string& name) -> Developer& {
    auto it = devs_.find(name);
    if (it == devs_.end()) throw KernelError("unknown-developer", "unknown developer '" + name + "'");
    return it->second;
}

auto Kernel::dev(const std::string& name) const -> const Developer& {
    auto it = devs_.find(name);
    if (it == devs_.end()) throw KernelError("unknown-developer", "unknown developer '" + name + "'");
    return it->second;
}

auto Kernel::emit(EventKind kind, const std::string& developer, nlohmann::json details) -> const KernelEvent& {
    KernelEvent e;
    e.seq = events_.size() + 1;
    e.kind = kind;
    e.developer = developer;
    e.details = std::move(details);
    events_.push_back(std::move(e));
    if (sink_) sink_(events_.back());
    return events_.back();
}

void Kernel::resolve_target(const Developer& d, EditOp& op) const {
    if (op.target != no_element || op.kind == OpKind::create_class) return;
    if (op.target_name.empty()) throw KernelError("malformed-op", "op has neither target nor target_name");
    auto id = d.view->elements.lookup(op.target_name);
    if (!id) throw KernelError("unknown-element", "no element named '" + op.target_name + "' in " + d.name + "'s view");
    op.target = *id;
}

auto Kernel::names(const std::vector<ElementId>& ids, const View* extra) const -> nlohmann::json {
    auto out = nlohmann::json::array();
    for (auto id : ids) {
        const ElementInfo* info = extra ? extra->elements.find(id) : nullptr;
        out.push_back(info ? info->qualified_name : name_of(id));
    }
    return out;
}

auto Kernel::name_of(ElementId id) const -> std::string {
    if (const auto* info = snapshot_->elements.find(id)) return info->qualified_name;
    for (const auto& [_, d] : devs_) {
        if (const auto* info = d.view->elements.find(id)) return info->qualified_name;
    }
    return "#" + std::to_string(id);
}

auto Kernel::union_views() const -> std::vector<std::shared_ptr<const View>> {
    std::vector<std::shared_ptr<const View>> out{snapshot_};
    for (const auto& [_, d] : devs_) {
        if (d.mode == Mode::on_record && d.view != snapshot_) out.push_back(d.view);
    }
    return out;
}

auto Kernel::union_index() const -> RefIndex {
    std::vector<IndexSource> sources{{"snapshot", &snapshot_->bindings, {}}};
    for (const auto& [name, d] : devs_) {
        if (d.mode == Mode::on_record) sources.push_back({name, &d.view->bindings, d.last_good_edges});
    }
    return build_ref_index(sources);
}

auto Kernel::admit(const Developer& d, const View& candidate, const std::vector<ElementId>& touched,
                   const std::set<ElementId>& anchors, const std::set<ElementId>& deleted, bool collect_all) const
    -> Admission {
    Admission result;
    auto deny = [&](ElementId requested, const std::string& holder, ElementId held, std::string rule) {
        if (!result.first) result.first = Denial{holder, requested, held, rule};
        result.all.push_back({requested, holder, held, std::move(rule)});
    };

    ViewSet views;
    views.add(candidate.elements);
    views.add(d.view->elements);
    views.add(snapshot_->elements);
    std::vector<IndexSource> sources{{"snapshot", &snapshot_->bindings, {}},
                                     {d.name, &candidate.bindings, d.last_good_edges}};
    for (const auto& [name, other] : devs_) {
        if (name == d.name || other.mode != Mode::on_record || other.held.empty()) continue;
        views.add(other.view->elements);
        sources.push_back({name, &other.view->bindings, other.last_good_edges});
    }
    auto index = build_ref_index(sources);

    for (const auto& [name, other] : devs_) {
        if (name == d.name || other.mode != Mode::on_record) continue;
        for (auto e : touched) {
            for (auto h : other.held) {
                std::optional<DependencyRule> rule;
                if (views.find(e) && views.find(h)) {
                    rule = dependency_rule(e, h, index, views);
                } else if (e == h) {
                    rule = DependencyRule::same_element;
                }
                if (rule) {
                    deny(e, name, h, std::string(to_string(*rule)));
                    if (!collect_all) return result;
                }
            }
        }
        for (auto a : anchors) {
            if (other.deleting.count(a)) {
                deny(a, name, a, "structural");
                if (!collect_all) return result;
            }
        }
        for (auto x : deleted) {
            if (other.anchors.count(x)) {
                deny(x, name, x, "structural");
                if (!collect_all) return result;
            }
        }
    }
    return result;
}

void Kernel::emit_build_status(const Developer& d, const BuildReport& report) {
    emit(EventKind::build_status, d.name,
         {{"buildable", report.buildable},
          {"errors", errors_json(*d.view)},
          {"version_checked", report.version_checked}});
}

auto Kernel::request_edit(const std::string& developer, EditOp op, std::int64_t now_ms) -> EditResult {
    expire_leases(now_ms);
    auto& d = dev(developer);
    op.created.clear();
    resolve_target(d, op);

    Ast tree = d.view->tree;
    ApplyOutcome outcome;
    try {
        outcome = apply_op(tree, d.view->bindings, op, ids_);
    } catch (const OpError& e) {
        throw KernelError(e.code(), e.what());
    }
    auto label = d.name + "@v" + std::to_string(d.base_version) + "+" + std::to_string(d.pending.size() + 1);
    auto candidate = View::build(std::move(tree), label);

    EditResult result;
    result.op = op;
    result.touched = outcome.touched;
    result.report = candidate->report;

    if (d.mode == Mode::on_record) {
        std::set<ElementId> anchors;
        if (outcome.anchor != no_element) anchors.insert(outcome.anchor);
        std::set<ElementId> deleted(outcome.deleted.begin(), outcome.deleted.end());
        auto admission = admit(d, *candidate, outcome.touched, anchors, deleted, false);
        if (admission.first) {
            const auto& den = *admission.first;
            ++stats_.lock_denials;
            result.denial = den;
            emit(EventKind::lock_denied, d.name,
                 {{"op", std::string(to_string(op.kind))},
                  {"target", op.target},
                  {"holder", den.holder},
                  {"requested", den.requested},
                  {"requested_name", d.view->elements.find(den.requested) ? names({den.requested}, d.view.get())[0]
                                                                        : names({den.requested}, candidate.get())[0]},
                  {"held", den.held},
                  {"held_name", name_of(den.held)},
                  {"rule", den.rule}});
            return result;
        }
        d.held.insert(outcome.touched.begin(), outcome.touched.end());
        d.anchors.insert(anchors.begin(), anchors.end());
        d.deleting.insert(deleted.begin(), deleted.end());
        emit(EventKind::lock_granted, d.name,
             {{"op", std::string(to_string(op.kind))},
              {"target", op.target},
              {"elements", outcome.touched},
              {"names", names(outcome.touched, candidate.get())}});
    } else {
        d.buffered.push_back(outcome);
    }

    d.last_activity = now_ms;
    d.pending.push_back(op);
    d.view = candidate;
    if (candidate->report.buildable) d.last_good_edges = edges_of(candidate->bindings);
    result.granted = true;
    emit(EventKind::edit_applied, d.name,
         {{"op", to_json(op)}, {"base_version", d.base_version}, {"pending", d.pending.size()}});
    emit_build_status(d, candidate->report);

    if (d.mode == Mode::on_record && config_.auto_commit && candidate->report.buildable) {
        commit_now(d);
        result.committed_version = version_;
    }
    return result;
}

auto Kernel::try_commit(const std::string& developer, std::int64_t now_ms) -> CommitResult {
    expire_leases(now_ms);
    auto& d = dev(developer);
    if (d.mode != Mode::on_record) throw KernelError("off-record-violation", d.name + " is off record");
    if (d.pending.empty()) throw KernelError("empty-overlay", d.name + " has nothing to commit");
    d.last_activity = now_ms;
    CommitResult result;
    result.report = d.view->report;
    if (!d.view->report.buildable) {
        ++stats_.rejected_commits;
        result.version = version_;
        return result;
    }
    commit_now(d);
    result.committed = true;
    result.version = version_;
    return result;
}

void Kernel::clear_overlay(Developer& d) {
    d.pending.clear();
    d.held.clear();
    d.anchors.clear();
    d.deleting.clear();
    d.last_good_edges.clear();
    d.buffered.clear();
    d.view = snapshot_;
    d.base_version = version_;
    if (d.mode == Mode::off_record) d.departure = snapshot_;
}

void Kernel::commit_now(Developer& d) {
    if (!d.view->report.buildable) throw std::logic_error("commit of an unbuildable overlay");
    ++version_;
    snapshot_ = d.view;
    ++stats_.commits;
    auto ops = nlohmann::json::array();
    for (const auto& op : d.pending) ops.push_back(to_json(op));
    auto released = sorted(d.held);
    clear_overlay(d);
    emit(EventKind::committed, d.name, {{"version", version_}, {"ops", ops}, {"released", released}});

    for (auto& [name, other] : devs_) {
        if (name == d.name || other.mode != Mode::on_record) continue;
        if (other.pending.empty()) {
            other.view = snapshot_;
            other.base_version = version_;
        } else {
            rebase(other);
        }
    }
}

auto Kernel::replay(const View& base, std::vector<EditOp>& ops, std::vector<ApplyOutcome>& outcomes,
                    std::string label) -> std::shared_ptr<const View> {
    Ast tree = base.tree;
    BindingTable bindings = base.bindings;
    outcomes.clear();
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (i > 0) bindings = rebind(tree);
        outcomes.push_back(apply_op(tree, bindings, ops[i], ids_));
    }
    return View::build(std::move(tree), std::move(label));
}

void Kernel::rebase(Developer& d) {
    std::vector<ApplyOutcome> outcomes;
    auto ops = d.pending;
    auto label = d.name + "@v" + std::to_string(version_) + "+" + std::to_string(ops.size());
    try {
        d.view = replay(*snapshot_, ops, outcomes, label);
    } catch (const OpError& e) {
        ++stats_.rebase_failures;
        auto dropped = d.pending.size();
        clear_overlay(d);
        emit(EventKind::reverted, d.name,
             {{"reason", "rebase-failed"}, {"error", e.code()}, {"message", e.what()}, {"ops", dropped}});
        return;
    }
    d.pending = std::move(ops);
    d.base_version = version_;
    if (d.view->report.buildable) d.last_good_edges = edges_of(d.view->bindings);
}

void Kernel::revert(const std::string& developer, std::int64_t now_ms) {
    expire_leases(now_ms);
    auto& d = dev(developer);
    if (d.pending.empty() && d.held.empty()) return;
    auto dropped = d.pending.size();
    clear_overlay(d);
    emit(EventKind::reverted, d.name, {{"reason", "requested"}, {"ops", dropped}});
}

void Kernel::expire_leases(std::int64_t now_ms) {
    if (config_.lock_lease_ms <= 0) return;
    for (auto& [name, d] : devs_) {
        if (d.mode != Mode::on_record || (d.pending.empty() && d.held.empty())) continue;
        if (now_ms - d.last_activity < config_.lock_lease_ms) continue;
        auto dropped = d.pending.size();
        clear_overlay(d);
        emit(EventKind::reverted, d.name, {{"reason", "lease-expired"}, {"ops", dropped}});
    }
}

auto Kernel::set_mode(const std::string& developer, Mode mode, std::int64_t now_ms)
    -> std::optional<ReconcileResult> {
    expire_leases(now_ms);
    auto& d = dev(developer);
    if (d.mode == mode) return std::nullopt;
    d.last_activity = now_ms;

    if (mode == Mode::off_record) {
        if (!d.pending.empty()) {
            throw KernelError("nonempty-overlay", d.name + " must commit or revert before going off record");
        }
        d.mode = Mode::off_record;
        clear_overlay(d);
        emit(EventKind::mode_changed, d.name, {{"mode", "off_record"}, {"version", version_}});
        return std::nullopt;
    }

    d.mode = Mode::on_record;
    emit(EventKind::mode_changed, d.name, {{"mode", "on_record"}, {"version", version_}});

    ReconcileResult r;
    r.ops = d.pending.size();
    if (d.pending.empty()) {
        clear_overlay(d);
        d.departure.reset();
        emit(EventKind::reconcile_result, d.name, {{"clean", true}, {"ops", 0}});
        return r;
    }

    std::set<ElementId> touched, anchors, deleted;
    for (const auto& o : d.buffered) {
        touched.insert(o.touched.begin(), o.touched.end());
        if (o.anchor != no_element) anchors.insert(o.anchor);
        deleted.insert(o.deleted.begin(), o.deleted.end());
    }

    if (d.departure != snapshot_) {
        auto before = element_contents(d.departure->tree);
        auto now = element_contents(snapshot_->tree);
        for (auto e : touched) {
            auto b = before.find(e);
            if (b == before.end()) continue;
            auto n = now.find(e);
            if (n == now.end() || !(n->second == b->second)) r.changed.push_back(e);
        }
    }

    auto ops = d.pending;
    std::vector<ApplyOutcome> outcomes;
    std::shared_ptr<const View> candidate;
    try {
        candidate = replay(*snapshot_, ops, outcomes, d.name + "@v" + std::to_string(version_) + "+" +
                                                          std::to_string(ops.size()));
        for (const auto& o : outcomes) {
            touched.insert(o.touched.begin(), o.touched.end());
            if (o.anchor != no_element) anchors.insert(o.anchor);
            deleted.insert(o.deleted.begin(), o.deleted.end());
        }
    } catch (const OpError& e) {
        r.replay_error = e.code() + ": " + e.what();
    }

    auto touched_list = sorted(touched);
    auto admission = admit(d, candidate ? *candidate : *d.view, touched_list, anchors, deleted, true);
    r.blocking = std::move(admission.all);
    r.clean = r.blocking.empty() && r.changed.empty() && r.replay_error.empty();

    if (!r.clean) {
        ++stats_.reconcile_conflicts;
        auto blocking = nlohmann::json::array();
        for (const auto& b : r.blocking) {
            blocking.push_back({{"requested", b.requested},
                                {"holder", b.holder},
                                {"held", b.held},
                                {"rule", b.rule}});
        }
        nlohmann::json details{{"clean", false},
                               {"ops", r.ops},
                               {"blocking", blocking},
                               {"changed", r.changed},
                               {"changed_names", names(r.changed, d.departure.get())}};
        if (!r.replay_error.empty()) details["error"] = r.replay_error;
        clear_overlay(d);
        d.departure.reset();
        emit(EventKind::reconcile_result, d.name, std::move(details));
        return r;
    }

    d.pending = std::move(ops);
    d.view = candidate;
    d.base_version = version_;
    d.held = std::move(touched);
    d.anchors = std::move(anchors);
    d.deleting = std::move(deleted);
    d.buffered.clear();
    d.departure.reset();
    if (candidate->report.buildable) d.last_good_edges = edges_of(candidate->bindings);
    emit(EventKind::reconcile_result, d.name,
         {{"clean", true}, {"ops", r.ops}, {"elements", touched_list}, {"buildable", candidate->report.buildable}});
    if (config_.auto_commit && candidate->report.buildable) commit_now(d);
    return r;
}

auto Kernel::snapshot_of(const std::string& developer) const -> DeveloperView {
    const auto& d = dev(developer);
    return {d.name, d.mode, d.base_version, d.view, d.pending.size()};
}

auto Kernel::mode_of(const std::string& developer) const -> Mode { return dev(developer).mode; }

auto Kernel::locks_of(const std::string& developer) const -> std::vector<ElementId> {
    return sorted(dev(developer).held);
}

auto Kernel::pending_of(const std::string& developer) const -> const std::vector<EditOp>& {
    return dev(developer).pending;
}

auto Kernel::lock_table() const -> std::map<std::string, std::vector<ElementId>> {
    std::map<std::string, std::vector<ElementId>> out;
    for (const auto& [name, d] : devs_) out[name] = sorted(d.held);
    return out;
}

auto Kernel::resolve(const std::string& developer, std::string_view qualified_name) const
    -> std::optional<ElementId> {
    return dev(developer).view->elements.lookup(qualified_name);
}

auto replay_log(const Ast& initial, const std::vector<KernelEvent>& events) -> std::string {
    Ast tree = initial;
    auto bindings = rebind(tree);
    IdAllocator unused(max_id(tree) + 1);
    for (const auto& e : events) {
        if (e.kind != EventKind::committed) continue;
        for (const auto& j : e.details.at("ops")) {
            auto op = edit_op_from_json(j);
            apply_op(tree, bindings, op, unused);
            bindings = rebind(tree);
        }
    }
    return canonicalize(tree);
}

}  // namespace ssd
