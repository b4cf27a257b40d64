/// @file elements.hpp
/// @brief Element identity: per-view element tables, qualified names, the id
/// allocator, and per-element content signatures.

#pragma once

#include <ssd/minilang/ast.hpp>
#include <ssd/minilang/visit.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ssd {

/// Raised when a query names an element absent from every consulted view.
class UnknownElement : public std::runtime_error {
public:
    explicit UnknownElement(ElementId id)
        : std::runtime_error("unknown element #" + std::to_string(id)), id_(id) {}
    auto id() const -> ElementId { return id_; }

private:
    ElementId id_;
};

struct ElementInfo {
    ElementId id = no_element;
    ElementKind kind = ElementKind::class_decl;
    ElementId parent = no_element;
    ElementId method = no_element;  // nearest ancestor-or-self of kind method
    std::string qualified_name;     // Demo.Foo, Demo.Foo.i, Demo.Foo/body[2]
    Span span;
};

/// The elements of one view (snapshot or overlay), in preorder.
class ElementTable {
public:
    ElementTable() = default;
    static auto from(const Ast& ast) -> ElementTable;

    auto find(ElementId id) const -> const ElementInfo*;
    auto lookup(std::string_view qualified_name) const -> std::optional<ElementId>;
    auto elements() const -> const std::vector<ElementInfo>& { return elements_; }
    auto size() const -> std::size_t { return elements_.size(); }

private:
    std::vector<ElementInfo> elements_;
    std::unordered_map<ElementId, std::size_t> by_id_;
    std::unordered_map<std::string, ElementId> by_name_;
};

/// Several views queried as one. Ids are global, so an element present in
/// more than one view has the same kind and parent in each.
class ViewSet {
public:
    ViewSet() = default;
    ViewSet(const ElementTable& single) : tables_{&single} {}  // NOLINT(implicit)
    explicit ViewSet(std::vector<const ElementTable*> tables) : tables_(std::move(tables)) {}

    void add(const ElementTable& t) { tables_.push_back(&t); }
    auto find(ElementId id) const -> const ElementInfo*;
    auto get(ElementId id) const -> const ElementInfo&;

    /// Every distinct element across the views, sorted by id.
    auto all() const -> std::vector<const ElementInfo*>;

private:
    std::vector<const ElementTable*> tables_;
};

/// Monotone id source; ids are never handed out twice.
class IdAllocator {
public:
    explicit IdAllocator(ElementId next = 1) : next_(next) {}
    auto allocate() -> ElementId { return next_++; }
    auto peek() const -> ElementId { return next_; }

private:
    ElementId next_;
};

/// Own content of an element: its header text (children excluded) and its
/// ordered child-id lists. Two versions of an element are "the same" iff
/// their contents compare equal.
struct ElementContent {
    ElementKind kind = ElementKind::class_decl;
    ElementId parent = no_element;
    std::string header;
    std::vector<std::vector<ElementId>> children;

    friend auto operator==(const ElementContent&, const ElementContent&) -> bool = default;
};

/// Content of every element, plus the unit's class list under key no_element.
auto element_contents(const Ast& ast) -> std::unordered_map<ElementId, ElementContent>;

}  // namespace ssd
