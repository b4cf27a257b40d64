/// @file generator.hpp
/// @brief Seeded random scenarios with deliberate contention on a small
/// shared project.

#pragma once

#include <ssd/sim/scenario.hpp>

#include <cstdint>

namespace ssd::sim {

struct GeneratorOptions {
    int developers = 3;
    int ops_per_developer = 50;
    int classes = 2;
    int fields = 3;   // per class
    int methods = 3;  // per class, two statements each
};

/// Project text used by generated scenarios.
auto generated_project(const GeneratorOptions& options = {}) -> std::string;

/// Same seed and options always give the same scenario. Edits retry with
/// until_granted(3,5); unresolved actions are skipped; auto_commit is off
/// and developers check in every few edits.
auto generate_scenario(std::uint64_t seed, const GeneratorOptions& options = {}) -> Scenario;

}  // namespace ssd::sim
