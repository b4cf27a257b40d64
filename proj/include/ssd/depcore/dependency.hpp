/// @file dependency.hpp
/// @brief The reference index and the pairwise dependency predicate.
///
/// Two elements are dependent when
///   1. they are the same element,
///   2. they share an enclosing method (ancestor-or-self of kind method), or
///   3. one holds a reference site bound to the other.
/// The predicate is symmetric and reflexive but not transitive.

#pragma once

#include <ssd/depcore/elements.hpp>
#include <ssd/semantics/semantics.hpp>

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ssd {

struct RefEdge {
    ElementId from = no_element;
    ElementId to = no_element;

    friend auto operator<=>(const RefEdge&, const RefEdge&) = default;
};

/// Distinct (from, target) pairs of a binding table, sorted.
auto edges_of(const BindingTable& bindings) -> std::vector<RefEdge>;

/// Directed reference edges from one or more views. Each edge remembers the
/// views that contributed it.
class RefIndex {
public:
    void add(RefEdge edge, const std::string& source);

    /// True iff (a, b) or (b, a) is an edge.
    auto linked(ElementId a, ElementId b) const -> bool;

    /// Elements with an edge to or from `e`.
    auto neighbors(ElementId e) const -> std::vector<ElementId>;

    auto edges() const -> std::vector<RefEdge>;
    auto sources(RefEdge edge) const -> std::vector<std::string>;
    auto size() const -> std::size_t { return sources_.size(); }

private:
    struct EdgeHash {
        auto operator()(const RefEdge& e) const noexcept -> std::size_t {
            return std::hash<ElementId>{}(e.from * 0x9E3779B97F4A7C15ull ^ e.to);
        }
    };

    auto source_slot(const std::string& source) -> std::uint32_t;

    std::unordered_map<RefEdge, std::vector<std::uint32_t>, EdgeHash> sources_;
    std::unordered_map<ElementId, std::vector<ElementId>> adjacent_;
    std::vector<std::string> source_names_;
};

/// One view's contribution to the index: its (possibly partial) bindings and
/// any edges carried over from the view's last successful bind.
struct IndexSource {
    std::string name;
    const BindingTable* bindings = nullptr;
    std::span<const RefEdge> extra_edges;
};

auto build_ref_index(std::span<const IndexSource> sources) -> RefIndex;

enum class DependencyRule { same_element = 1, common_method = 2, reference = 3 };

auto to_string(DependencyRule rule) -> std::string_view;

/// Nearest ancestor-or-self of kind method, none for classes and fields.
auto enclosing_method(ElementId e, const ViewSet& view) -> std::optional<ElementId>;

/// The first rule (in order 1, 2, 3) relating a and b, if any.
auto dependency_rule(ElementId a, ElementId b, const RefIndex& index, const ViewSet& view)
    -> std::optional<DependencyRule>;

auto dependent(ElementId a, ElementId b, const RefIndex& index, const ViewSet& view) -> bool;

/// Exactly { x | dependent(e, x) } over the elements of `view`, sorted by id.
/// This is the pairwise set, not a closure.
auto dependents_of(ElementId e, const RefIndex& index, const ViewSet& view) -> std::vector<ElementId>;

}  // namespace ssd
