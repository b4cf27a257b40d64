/// @file simulator.hpp
/// @brief Discrete-event replay of a scenario against the kernel and/or the
/// checkin/checkout baseline.

#pragma once

#include <ssd/kernel/kernel.hpp>
#include <ssd/sim/baseline.hpp>
#include <ssd/sim/scenario.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ssd::sim {

struct Metrics {
    // SSD model
    std::uint64_t commits = 0;
    std::uint64_t lock_denials = 0;
    std::int64_t total_blocked_virtual_ms = 0;
    std::uint64_t ssd_conflicts = 0;  // rebase failures
    std::uint64_t reconcile_conflicts = 0;
    std::uint64_t rejected_commits = 0;
    // baseline model
    std::uint64_t baseline_checkins = 0;   // non-noop checkin attempts
    std::uint64_t baseline_commits = 0;    // checkins that moved central
    std::uint64_t baseline_conflicts = 0;  // rejected checkins
    std::uint64_t merge_invocations = 0;
    // both
    std::optional<std::int64_t> conflicts_prevented;
    std::uint64_t assertion_failures = 0;
    std::uint64_t skipped = 0;
};

struct SimOptions {
    /// Called after every kernel event of the SSD run.
    std::function<void(const Kernel&, const KernelEvent&)> observer;
};

struct SimResult {
    std::string scenario;
    SimMode mode = SimMode::ssd;
    Metrics metrics;
    std::vector<std::string> trace;  // one JSON record per line
    std::vector<KernelEvent> kernel_events;
    std::optional<std::string> ssd_text;
    std::optional<std::string> baseline_text;
    std::vector<std::string> failures;  // assertion failures and unresolved actions

    auto ok() const -> bool { return failures.empty(); }
};

/// Runs the scenario. Throws KernelError("unbuildable-project") when the
/// project does not build; everything else is recorded in the result.
auto run_scenario(const Scenario& scenario, SimMode mode, const SimOptions& options = {}) -> SimResult;

auto format_trace(const SimResult& result) -> std::string;
auto format_report(const SimResult& result) -> std::string;  // key=value lines
auto format_table(const SimResult& result) -> std::string;

}  // namespace ssd::sim
