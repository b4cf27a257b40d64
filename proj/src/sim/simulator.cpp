#include <ssd/sim/simulator.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

namespace ssd::sim {

namespace {

using nlohmann::json;

struct DevState {
    std::vector<const Action*> actions;
    std::size_t next = 0;
    std::int64_t clock = 0;
    // retry of a denied edit
    bool parked = false;
    std::string holder;
    std::optional<std::int64_t> retry_at;
    EditOp retry_op;
    int attempts = 0;
    std::int64_t blocked_since = 0;
    // assertion state
    bool last_edit_denied = false;
    std::string last_error;
};

/// Error codes the baseline model can produce; other expect_error actions
/// only make sense against the kernel.
auto baseline_code(const std::string& code) -> bool {
    return code == "unknown-element" || code == "malformed-op" || code == "unbuildable";
}

class Runner {
public:
    Runner(const Scenario& s, bool ssd, const Ast& project, const SimOptions& options, SimResult& out)
        : s_(s), ssd_(ssd), options_(options), out_(out), tag_(ssd ? "ssd" : "baseline") {
        for (const auto& name : s.developers) devs_[name];
        for (const auto& a : s.actions) devs_.at(a.developer).actions.push_back(&a);
        if (ssd_) {
            KernelConfig cfg;
            cfg.auto_commit = s.auto_commit.value_or(true);
            kernel_.emplace(project, cfg);
            for (const auto& name : s.developers) kernel_->add_developer(name);
            kernel_->on_event([this](const KernelEvent& e) { on_kernel_event(e); });
        } else {
            repo_.emplace(project);
            for (const auto& name : s.developers) repo_->add_developer(name);
        }
    }

    void run() {
        while (!aborted_) {
            std::string best;
            std::int64_t best_t = 0;
            for (auto& [name, d] : devs_) {
                if (d.parked) continue;
                std::int64_t t;
                if (d.retry_at) {
                    t = *d.retry_at;
                } else if (d.next < d.actions.size()) {
                    t = std::max(d.actions[d.next]->vt, d.clock);
                } else {
                    continue;
                }
                if (best.empty() || t < best_t) {
                    best = name;
                    best_t = t;
                }
            }
            if (best.empty()) {
                if (!break_deadlock()) break;
                continue;
            }
            now_ = best_t;
            step(best, devs_.at(best));
        }
        finish();
    }

private:
    void step(const std::string& name, DevState& d) {
        const Action& a = *d.actions[d.next];
        if (d.retry_at) {
            d.retry_at.reset();
            attempt_edit(name, d, a, d.retry_op);
            return;
        }
        if (a.kind != ActionKind::expect_denied && a.kind != ActionKind::expect_error) d.last_error.clear();
        switch (a.kind) {
        case ActionKind::edit:
            d.attempts = 0;
            d.last_edit_denied = false;
            attempt_edit(name, d, a, a.op);
            return;
        case ActionKind::expect_denied:
            if (ssd_ && !d.last_edit_denied) {
                fail(a, "expect_denied: the last edit of " + name + " was not denied");
            }
            break;
        case ActionKind::expect_error:
            if ((ssd_ || baseline_code(a.code)) && d.last_error != a.code) {
                fail(a, "expect_error " + a.code + ": got " + (d.last_error.empty() ? "no error" : d.last_error));
            }
            break;
        case ActionKind::try_commit:
        case ActionKind::checkin: guarded(name, d, a, [&] { commit(name, d); }); break;
        case ActionKind::revert:
            guarded(name, d, a, [&] {
                if (ssd_) {
                    kernel_->revert(name, now_);
                } else {
                    repo_->revert(name);
                    record({{"t", "revert"}, {"dev", name}});
                }
            });
            break;
        case ActionKind::off_record:
        case ActionKind::on_record:
            if (ssd_) {
                guarded(name, d, a, [&] {
                    kernel_->set_mode(name, a.kind == ActionKind::off_record ? Mode::off_record : Mode::on_record,
                                      now_);
                });
            }
            break;
        }
        advance(d);
    }

    void attempt_edit(const std::string& name, DevState& d, const Action& a, EditOp op) {
        ++d.attempts;
        if (!ssd_) {
            guarded(name, d, a, [&] {
                auto j = to_json(op);
                repo_->apply(name, std::move(op));
                record({{"t", "edit"}, {"dev", name}, {"op", j}});
            });
            advance(d);
            return;
        }
        std::optional<EditResult> r;
        guarded(name, d, a, [&] { r = kernel_->request_edit(name, std::move(op), now_); });
        if (!r || r->granted) {
            if (d.attempts > 1) metrics().total_blocked_virtual_ms += now_ - d.blocked_since;
            advance(d);
            return;
        }
        if (d.attempts == 1) {
            d.last_edit_denied = true;
            d.blocked_since = now_;
        }
        if (a.retry.until_granted && d.attempts < a.retry.max_attempts) {
            d.parked = true;
            d.holder = r->denial->holder;
            d.retry_op = r->op;
            return;
        }
        if (a.retry.until_granted) {
            metrics().total_blocked_virtual_ms += now_ - d.blocked_since;
            unresolved(a, "edit of " + name + " still denied after " + std::to_string(d.attempts) + " attempts");
        }
        advance(d);
    }

    void commit(const std::string& name, DevState& d) {
        if (ssd_) {
            if (kernel_->mode_of(name) == Mode::on_record && kernel_->pending_of(name).empty()) return;
            if (!kernel_->try_commit(name, now_).committed) d.last_error = "unbuildable";
            return;
        }
        auto r = repo_->checkin(name);
        if (r.outcome != CheckinOutcome::noop) ++metrics().baseline_checkins;
        if (r.outcome == CheckinOutcome::unbuildable) d.last_error = "unbuildable";
        json conflicts = json::array();
        for (const auto& c : r.conflicts) {
            conflicts.push_back({{"element", c.element}, {"name", c.name}, {"reason", c.reason}});
        }
        record({{"t", "checkin"},
                {"dev", name},
                {"outcome", std::string(to_string(r.outcome))},
                {"version", r.version},
                {"conflicts", conflicts}});
    }

    template <typename F>
    void guarded(const std::string& name, DevState& d, const Action& a, F&& body) {
        try {
            body();
        } catch (const KernelError& e) {
            error(name, d, a, e.code(), e.what());
        } catch (const OpError& e) {
            error(name, d, a, e.code(), e.what());
        }
    }

    void error(const std::string& name, DevState& d, const Action& a, const std::string& code,
               const std::string& message) {
        d.last_error = code;
        record({{"t", "error"}, {"dev", name}, {"code", code}, {"message", message}, {"line", a.line}});
        bool expected = d.next + 1 < d.actions.size() && d.actions[d.next + 1]->kind == ActionKind::expect_error;
        if (!expected) unresolved(a, code + ": " + message);
    }

    void unresolved(const Action& a, const std::string& message) {
        if (s_.on_unresolved == OnUnresolved::skip) {
            ++metrics().skipped;
            return;
        }
        out_.failures.push_back(tag_ + ": line " + std::to_string(a.line) + ": " + message);
        aborted_ = true;
    }

    void fail(const Action& a, const std::string& message) {
        ++metrics().assertion_failures;
        out_.failures.push_back(tag_ + ": line " + std::to_string(a.line) + ": " + message);
        aborted_ = true;
    }

    /// Nothing can run but someone waits on a lock no one will release.
    auto break_deadlock() -> bool {
        for (auto& [name, d] : devs_) {
            if (!d.parked) continue;
            const Action& a = *d.actions[d.next];
            d.parked = false;
            metrics().total_blocked_virtual_ms += now_ - d.blocked_since;
            unresolved(a, name + " waits forever on " + d.holder);
            advance(d);
            return !aborted_;
        }
        return false;
    }

    void advance(DevState& d) {
        ++d.next;
        d.clock = now_;
        d.attempts = 0;
    }

    void on_kernel_event(const KernelEvent& e) {
        auto j = to_json(e);
        j["vt"] = now_;
        j["mode"] = tag_;
        out_.trace.push_back(j.dump());
        out_.kernel_events.push_back(e);
        if (options_.observer) options_.observer(*kernel_, e);
        bool releases = e.kind == EventKind::committed || e.kind == EventKind::reverted ||
                        (e.kind == EventKind::reconcile_result && !e.details.value("clean", true));
        if (!releases) return;
        for (auto& [name, d] : devs_) {
            if (d.parked && d.holder == e.developer) {
                d.parked = false;
                d.retry_at = now_ + d.actions[d.next]->retry.backoff_ms;
            }
        }
    }

    void record(json j) {
        j["vt"] = now_;
        j["mode"] = tag_;
        out_.trace.push_back(j.dump());
    }

    auto metrics() -> Metrics& { return out_.metrics; }

    void finish() {
        auto& m = metrics();
        if (ssd_) {
            const auto& st = kernel_->stats();
            m.commits = st.commits;
            m.lock_denials = st.lock_denials;
            m.ssd_conflicts = st.rebase_failures;
            m.reconcile_conflicts = st.reconcile_conflicts;
            m.rejected_commits = st.rejected_commits;
            out_.ssd_text = kernel_->snapshot().text;
        } else {
            m.baseline_conflicts = repo_->conflicts();
            m.merge_invocations = repo_->merge_invocations();
            m.baseline_commits = repo_->version() - 1;
            out_.baseline_text = repo_->central().text;
        }
    }

    const Scenario& s_;
    bool ssd_;
    const SimOptions& options_;
    SimResult& out_;
    std::string tag_;
    std::optional<Kernel> kernel_;
    std::optional<BaselineRepo> repo_;
    std::map<std::string, DevState> devs_;
    std::int64_t now_ = 0;
    bool aborted_ = false;
};

}  // namespace

auto run_scenario(const Scenario& scenario, SimMode mode, const SimOptions& options) -> SimResult {
    auto checked = check_source({scenario.project_source, scenario.project_path});
    if (!checked.ast || !checked.gate.report.buildable) {
        const auto& e = checked.gate.report.errors.front();
        throw KernelError("unbuildable-project", "project is not buildable: " + e.code + " " + e.message);
    }
    SimResult out;
    out.scenario = scenario.name;
    out.mode = mode;
    if (mode != SimMode::baseline) Runner(scenario, true, *checked.ast, options, out).run();
    if (mode != SimMode::ssd) Runner(scenario, false, *checked.ast, options, out).run();
    if (mode == SimMode::both) {
        out.metrics.conflicts_prevented = static_cast<std::int64_t>(out.metrics.baseline_conflicts) -
                                          static_cast<std::int64_t>(out.metrics.ssd_conflicts);
    }
    return out;
}

auto format_trace(const SimResult& result) -> std::string {
    std::string out;
    for (const auto& line : result.trace) {
        out += line;
        out += '\n';
    }
    return out;
}

auto format_report(const SimResult& r) -> std::string {
    const auto& m = r.metrics;
    std::ostringstream out;
    out << "scenario=" << r.scenario << "\n";
    out << "mode=" << to_string(r.mode) << "\n";
    if (r.mode != SimMode::baseline) {
        out << "commits=" << m.commits << "\n";
        out << "lock_denials=" << m.lock_denials << "\n";
        out << "total_blocked_virtual_ms=" << m.total_blocked_virtual_ms << "\n";
        out << "ssd_conflicts=" << m.ssd_conflicts << "\n";
        out << "reconcile_conflicts=" << m.reconcile_conflicts << "\n";
        out << "rejected_commits=" << m.rejected_commits << "\n";
    }
    if (r.mode != SimMode::ssd) {
        out << "baseline_checkins=" << m.baseline_checkins << "\n";
        out << "baseline_commits=" << m.baseline_commits << "\n";
        out << "baseline_conflicts=" << m.baseline_conflicts << "\n";
        out << "merge_invocations=" << m.merge_invocations << "\n";
    }
    if (m.conflicts_prevented) out << "conflicts_prevented=" << *m.conflicts_prevented << "\n";
    out << "assertion_failures=" << m.assertion_failures << "\n";
    out << "skipped=" << m.skipped << "\n";
    out << "status=" << (r.ok() ? "ok" : "failed") << "\n";
    return out.str();
}

auto format_table(const SimResult& r) -> std::string {
    const auto& m = r.metrics;
    bool ssd = r.mode != SimMode::baseline;
    bool base = r.mode != SimMode::ssd;
    auto cell = [](bool present, auto value) { return present ? std::to_string(value) : std::string("-"); };
    struct Row {
        std::string metric, ssd, baseline;
    };
    std::vector<Row> rows{
        {"metric", "ssd", "baseline"},
        {"commits", cell(ssd, m.commits), cell(base, m.baseline_commits)},
        {"conflicts", cell(ssd, m.ssd_conflicts), cell(base, m.baseline_conflicts)},
        {"lock_denials", cell(ssd, m.lock_denials), "-"},
        {"blocked_virtual_ms", cell(ssd, m.total_blocked_virtual_ms), "-"},
        {"reconcile_conflicts", cell(ssd, m.reconcile_conflicts), "-"},
        {"rejected_commits", cell(ssd, m.rejected_commits), "-"},
        {"merge_invocations", "-", cell(base, m.merge_invocations)},
    };
    std::ostringstream out;
    for (const auto& row : rows) {
        out << std::left << std::setw(22) << row.metric << std::right << std::setw(8) << row.ssd << std::setw(10)
            << row.baseline << "\n";
    }
    if (m.conflicts_prevented) out << "conflicts_prevented = " << *m.conflicts_prevented << "\n";
    for (const auto& f : r.failures) out << "FAILED " << f << "\n";
    return out.str();
}

}  // namespace ssd::sim
