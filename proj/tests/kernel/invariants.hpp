#pragma once

// Kernel invariant checks shared by the kernel property tests and the
// acceptance binary. Each returns human-readable violations; empty = holds.

#include "oracles/dependency_oracle.hpp"

#include <ssd/kernel/kernel.hpp>
#include <ssd/minilang/printer.hpp>

#include <memory>
#include <string>
#include <vector>

namespace ssd::test {

/// No two developers hold a dependent pair, judged by the union index the
/// kernel itself consults.
inline auto lock_disjointness(const Kernel& k) -> std::vector<std::string> {
    std::vector<std::string> out;
    auto index = k.union_index();
    auto views_owned = k.union_views();
    ViewSet views;
    for (const auto& v : views_owned) views.add(v->elements);
    auto table = k.lock_table();
    for (auto a = table.begin(); a != table.end(); ++a) {
        if (k.mode_of(a->first) == Mode::off_record && !a->second.empty()) {
            out.push_back(a->first + " holds locks while off record");
        }
        for (auto b = std::next(a); b != table.end(); ++b) {
            for (auto x : a->second) {
                for (auto y : b->second) {
                    bool dep = (views.find(x) && views.find(y)) ? dependent(x, y, index, views) : x == y;
                    if (dep) {
                        out.push_back(a->first + ":" + k.name_of(x) + " vs " + b->first + ":" + k.name_of(y));
                    }
                }
            }
        }
    }
    return out;
}

/// Same property, decided by the brute-force oracle on each individual view
/// (snapshot and both overlays). Independent of RefIndex and ElementTable.
inline auto lock_disjointness_oracle(const Kernel& k) -> std::vector<std::string> {
    std::vector<std::string> out;
    auto table = k.lock_table();
    std::vector<std::shared_ptr<const View>> views{k.snapshot_view()};
    for (const auto& [name, _] : table) views.push_back(k.snapshot_of(name).view);
    std::vector<oracle::BruteForceDependency> oracles;
    std::vector<std::set<ElementId>> present;
    for (const auto& v : views) {
        oracles.emplace_back(v->tree);
        auto ids = oracles.back().ids();
        present.emplace_back(ids.begin(), ids.end());
    }
    for (auto a = table.begin(); a != table.end(); ++a) {
        for (auto b = std::next(a); b != table.end(); ++b) {
            for (auto x : a->second) {
                for (auto y : b->second) {
                    for (std::size_t i = 0; i < views.size(); ++i) {
                        if (present[i].count(x) && present[i].count(y) && oracles[i].dependent(x, y)) {
                            out.push_back("oracle: " + a->first + ":" + std::to_string(x) + " vs " + b->first +
                                          ":" + std::to_string(y));
                            break;
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Every on-record overlay is its pending ops replayed onto the current
/// snapshot, and everything those ops touch is locked.
inline auto overlay_consistency(const Kernel& k) -> std::vector<std::string> {
    std::vector<std::string> out;
    for (const auto& name : k.developers()) {
        auto view = k.snapshot_of(name);
        if (view.mode != Mode::on_record) continue;
        if (view.base_version != k.version()) out.push_back(name + " overlay is not based on the current version");
        Ast tree = k.snapshot().tree;
        auto bindings = k.snapshot().bindings;
        auto locks = k.locks_of(name);
        std::set<ElementId> held(locks.begin(), locks.end());
        IdAllocator unused(1u << 30);
        for (auto op : k.pending_of(name)) {
            try {
                auto outcome = apply_op(tree, bindings, op, unused);
                for (auto t : outcome.touched) {
                    if (!held.count(t)) out.push_back(name + " touches unlocked " + k.name_of(t));
                }
            } catch (const OpError& e) {
                out.push_back(name + " pending op fails on replay: " + e.what());
                break;
            }
            canonicalize(tree);
            bindings = bind(tree).table;
        }
        if (canonicalize(tree) != view.text()) out.push_back(name + " overlay differs from replayed pending ops");
    }
    return out;
}

/// The snapshot is buildable.
inline auto gate_invariant(const Kernel& k) -> std::vector<std::string> {
    if (build_gate(k.snapshot().tree).report.buildable) return {};
    return {"snapshot v" + std::to_string(k.version()) + " is not buildable"};
}

}  // namespace ssd::test
