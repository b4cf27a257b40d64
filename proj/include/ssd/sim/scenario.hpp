/// @file scenario.hpp
/// @brief Scenario scripts for the simulator (format 1).
///
/// A scenario is a header of `key: value` lines followed by `actions:` and
/// one action per line:
///
///     VT DEVELOPER ACTION [TARGET|CODE] [key=value ...]
///
/// Values may be double-quoted; `\"` and `\\` escape inside quotes. `#`
/// outside quotes starts a comment. See docs/scenario.md.

#pragma once

#include <ssd/kernel/edit_op.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssd::sim {

enum class SimMode { ssd, baseline, both };
enum class OnUnresolved { abort, skip };

auto to_string(SimMode mode) -> std::string_view;
auto sim_mode_from_string(std::string_view text) -> std::optional<SimMode>;

enum class ActionKind { edit, expect_denied, expect_error, try_commit, checkin, revert, off_record, on_record };

auto to_string(ActionKind kind) -> std::string_view;

/// `fail` is the default: a denied edit is not retried.
struct RetryPolicy {
    bool until_granted = false;
    int max_attempts = 1;
    std::int64_t backoff_ms = 0;
};

struct Action {
    std::int64_t vt = 0;
    std::string developer;
    ActionKind kind = ActionKind::edit;
    EditOp op;         // edits only; addressed by op.target_name
    std::string code;  // expect_error
    RetryPolicy retry;
    std::size_t line = 0;
};

struct Scenario {
    std::string name;
    std::string project_path;    // as written in the header
    std::string project_source;  // loaded text
    std::vector<std::string> developers;
    SimMode mode = SimMode::both;
    std::optional<bool> auto_commit;
    OnUnresolved on_unresolved = OnUnresolved::abort;
    std::vector<Action> actions;
};

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    auto line() const -> std::size_t { return line_; }

private:
    std::size_t line_;
};

/// Parses scenario text. The project file is not read; see load_scenario.
auto parse_scenario(std::string_view text) -> Scenario;

/// Reads a scenario file and its project, resolved relative to the scenario.
/// Throws ScenarioError for format problems, std::runtime_error for I/O.
auto load_scenario(const std::filesystem::path& path) -> Scenario;

/// Renders a scenario back to format 1 text; parse_scenario inverts it.
auto format_scenario(const Scenario& s) -> std::string;

}  // namespace ssd::sim
