/// @file baseline.hpp
/// @brief The checkin/checkout model SSD is compared against: private
/// working copies, a central tree that only moves at checkin, and an
/// element-wise three-way merge.

#pragma once

#include <ssd/kernel/kernel.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssd::sim {

struct MergeConflict {
    ElementId element = no_element;  // no_element for a post-merge build failure
    std::string name;                // qualified name in the base (or the side that has it)
    std::string reason;              // divergent, delete-modify, modify-delete, build
};

struct MergeResult {
    std::optional<Ast> merged;  // present iff no element-level conflict
    std::vector<MergeConflict> conflicts;
};

/// Merges `mine` into `theirs` against their common ancestor `base`, one
/// element at a time. An element changed on one side takes that side's
/// version; changed identically on both sides is fine; changed differently
/// is a conflict. Child lists merge as sets: theirs, minus mine's removals,
/// plus mine's additions placed after their nearest surviving predecessor.
auto three_way_merge(const Ast& base, const Ast& mine, const Ast& theirs) -> MergeResult;

enum class CheckinOutcome { noop, fast_forward, merged, conflict, unbuildable };

auto to_string(CheckinOutcome outcome) -> std::string_view;

struct CheckinResult {
    CheckinOutcome outcome = CheckinOutcome::noop;
    std::uint64_t version = 0;
    std::vector<MergeConflict> conflicts;
};

class BaselineRepo {
public:
    explicit BaselineRepo(const Ast& project);

    void add_developer(const std::string& name);

    /// Edits the developer's working copy; never blocks. Throws OpError.
    auto apply(const std::string& developer, EditOp op) -> ApplyOutcome;

    /// Publishes the working copy. When central moved since the developer's
    /// last sync the copy is merged; a conflicting checkin is rejected and
    /// the copy is reset to central.
    auto checkin(const std::string& developer) -> CheckinResult;

    /// Discards the working copy and syncs to central.
    void revert(const std::string& developer);

    auto central() const -> const View& { return *central_; }
    auto version() const -> std::uint64_t { return version_; }
    auto working(const std::string& developer) const -> const View&;
    auto merge_invocations() const -> std::uint64_t { return merges_; }
    auto conflicts() const -> std::uint64_t { return conflicts_; }

private:
    struct Copy {
        std::shared_ptr<const View> base;
        std::shared_ptr<const View> work;
    };

    auto copy(const std::string& developer) -> Copy&;

    std::shared_ptr<const View> central_;
    std::uint64_t version_ = 1;
    IdAllocator ids_;
    std::map<std::string, Copy> copies_;
    std::uint64_t merges_ = 0;
    std::uint64_t conflicts_ = 0;
};

}  // namespace ssd::sim
