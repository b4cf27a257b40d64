/// @file kernel.hpp
/// @brief The synchronization kernel: one authoritative snapshot, one overlay
/// per developer, element locks, and gated commit with rebase.
///
/// All commands run one at a time on the calling thread. Every state change
/// is reported as a KernelEvent with a gapless sequence number.

#pragma once

#include <ssd/depcore/dependency.hpp>
#include <ssd/depcore/elements.hpp>
#include <ssd/kernel/edit_op.hpp>
#include <ssd/semantics/semantics.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ssd {

struct KernelConfig {
    bool auto_commit = true;
    std::int64_t lock_lease_ms = 0;  // 0 = locks never expire
};

/// Parses `key = value` lines; `#` starts a comment. Throws
/// std::invalid_argument on unknown keys or bad values.
auto parse_config(std::string_view text) -> KernelConfig;
auto load_config(const std::filesystem::path& path) -> KernelConfig;

/// A tree together with everything derived from it. Immutable once built.
struct View {
    Ast tree;
    std::string text;  // canonical source
    ElementTable elements;
    BindingTable bindings;  // best-effort when the tree is unbuildable
    BuildReport report;

    static auto build(Ast tree, std::string label = {}) -> std::shared_ptr<const View>;
};

enum class Mode { on_record, off_record };

auto to_string(Mode mode) -> std::string_view;

enum class EventKind {
    lock_granted,
    lock_denied,
    edit_applied,
    build_status,
    committed,
    reverted,
    mode_changed,
    reconcile_result,
};

auto to_string(EventKind kind) -> std::string_view;
auto event_kind_from_string(std::string_view name) -> std::optional<EventKind>;

struct KernelEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::edit_applied;
    std::string developer;
    nlohmann::json details = nlohmann::json::object();
};

/// Flat record: {"t": kind, "seq": n, "dev": name, ...details}.
auto to_json(const KernelEvent& event) -> nlohmann::json;
auto event_from_json(const nlohmann::json& j) -> KernelEvent;

class KernelError : public std::runtime_error {
public:
    KernelError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    auto code() const -> const std::string& { return code_; }

private:
    std::string code_;
};

struct Denial {
    std::string holder;
    ElementId requested = no_element;
    ElementId held = no_element;
    std::string rule;  // same-element, common-method, reference, structural
};

struct EditResult {
    bool granted = false;
    std::optional<Denial> denial;
    EditOp op;  // target resolved, created ids filled
    std::vector<ElementId> touched;
    BuildReport report;
    std::optional<std::uint64_t> committed_version;
};

struct CommitResult {
    bool committed = false;
    std::uint64_t version = 0;
    BuildReport report;
};

struct BlockingPair {
    ElementId requested = no_element;
    std::string holder;
    ElementId held = no_element;
    std::string rule;
};

struct ReconcileResult {
    bool clean = true;
    std::size_t ops = 0;
    std::vector<BlockingPair> blocking;
    std::vector<ElementId> changed;
    std::string replay_error;
};

struct DeveloperView {
    std::string developer;
    Mode mode = Mode::on_record;
    std::uint64_t base_version = 0;
    std::shared_ptr<const View> view;
    std::size_t pending = 0;

    auto text() const -> const std::string& { return view->text; }
};

struct KernelStats {
    std::uint64_t commits = 0;
    std::uint64_t lock_denials = 0;
    std::uint64_t rejected_commits = 0;
    std::uint64_t rebase_failures = 0;
    std::uint64_t reconcile_conflicts = 0;
};

class Kernel {
public:
    /// `project` must be buildable; unnumbered elements receive ids here.
    /// Throws KernelError("unbuildable-project") otherwise.
    explicit Kernel(Ast project, KernelConfig config = {});
    static auto from_source(const SourceText& src, KernelConfig config = {}) -> Kernel;

    void add_developer(const std::string& name);
    auto developers() const -> std::vector<std::string>;

    /// `now_ms` drives lease expiry only.
    auto request_edit(const std::string& developer, EditOp op, std::int64_t now_ms = 0) -> EditResult;
    auto try_commit(const std::string& developer, std::int64_t now_ms = 0) -> CommitResult;
    void revert(const std::string& developer, std::int64_t now_ms = 0);
    auto set_mode(const std::string& developer, Mode mode, std::int64_t now_ms = 0)
        -> std::optional<ReconcileResult>;
    void expire_leases(std::int64_t now_ms);

    auto snapshot_of(const std::string& developer) const -> DeveloperView;
    auto snapshot() const -> const View& { return *snapshot_; }
    auto snapshot_view() const -> std::shared_ptr<const View> { return snapshot_; }
    auto version() const -> std::uint64_t { return version_; }

    auto mode_of(const std::string& developer) const -> Mode;
    auto locks_of(const std::string& developer) const -> std::vector<ElementId>;
    auto pending_of(const std::string& developer) const -> const std::vector<EditOp>&;
    auto lock_table() const -> std::map<std::string, std::vector<ElementId>>;

    /// Resolves a qualified name against the developer's current view.
    auto resolve(const std::string& developer, std::string_view qualified_name) const -> std::optional<ElementId>;
    auto name_of(ElementId id) const -> std::string;

    /// Union index over the snapshot and every on-record overlay, and the
    /// matching element views; what admission consults.
    auto union_index() const -> RefIndex;
    auto union_views() const -> std::vector<std::shared_ptr<const View>>;

    auto events() const -> const std::vector<KernelEvent>& { return events_; }
    auto stats() const -> const KernelStats& { return stats_; }
    auto config() const -> const KernelConfig& { return config_; }
    auto initial() const -> const Ast& { return initial_; }

    /// Called synchronously for every event, after it is appended.
    void on_event(std::function<void(const KernelEvent&)> sink) { sink_ = std::move(sink); }

private:
    struct Developer {
        std::string name;
        Mode mode = Mode::on_record;
        std::uint64_t base_version = 0;
        std::vector<EditOp> pending;
        std::shared_ptr<const View> view;
        std::vector<RefEdge> last_good_edges;
        std::set<ElementId> held;
        std::set<ElementId> anchors;   // classes receiving new members
        std::set<ElementId> deleting;  // elements removed by the overlay
        std::int64_t last_activity = 0;
        // Off record: the snapshot at departure and one outcome per buffered op.
        std::shared_ptr<const View> departure;
        std::vector<ApplyOutcome> buffered;
    };

    struct Admission {
        std::optional<Denial> first;
        std::vector<BlockingPair> all;
    };

    auto dev(const std::string& name) -> Developer&;
    auto dev(const std::string& name) const -> const Developer&;
    auto emit(EventKind kind, const std::string& developer, nlohmann::json details) -> const KernelEvent&;
    void resolve_target(const Developer& d, EditOp& op) const;
    auto admit(const Developer& d, const View& candidate, const std::vector<ElementId>& touched,
               const std::set<ElementId>& anchors, const std::set<ElementId>& deleted, bool collect_all) const
        -> Admission;
    void commit_now(Developer& d);
    void rebase(Developer& d);
    void clear_overlay(Developer& d);
    void emit_build_status(const Developer& d, const BuildReport& report);
    auto replay(const View& base, std::vector<EditOp>& ops, std::vector<ApplyOutcome>& outcomes,
                std::string label) -> std::shared_ptr<const View>;
    auto names(const std::vector<ElementId>& ids, const View* extra) const -> nlohmann::json;

    KernelConfig config_;
    Ast initial_;
    std::shared_ptr<const View> snapshot_;
    std::uint64_t version_ = 1;
    IdAllocator ids_;
    std::map<std::string, Developer> devs_;
    std::vector<KernelEvent> events_;
    KernelStats stats_;
    std::function<void(const KernelEvent&)> sink_;
};

/// Rebuilds the final snapshot text from an initial project and an event
/// log by reapplying the ops of every committed event in order.
auto replay_log(const Ast& initial, const std::vector<KernelEvent>& events) -> std::string;

}  // namespace ssd
