#include <ssd/depcore/dependency.hpp>

#include <algorithm>

namespace ssd {

auto edges_of(const BindingTable& bindings) -> std::vector<RefEdge> {
    std::vector<RefEdge> out;
    out.reserve(bindings.refs.size());
    for (const auto& r : bindings.refs) out.push_back({r.from, r.target});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

auto RefIndex::source_slot(const std::string& source) -> std::uint32_t {
    auto it = std::find(source_names_.begin(), source_names_.end(), source);
    if (it != source_names_.end()) return static_cast<std::uint32_t>(it - source_names_.begin());
    source_names_.push_back(source);
    return static_cast<std::uint32_t>(source_names_.size() - 1);
}

void RefIndex::add(RefEdge edge, const std::string& source) {
    auto slot = source_slot(source);
    auto [it, inserted] = sources_.try_emplace(edge);
    if (inserted) {
        adjacent_[edge.from].push_back(edge.to);
        if (edge.to != edge.from) adjacent_[edge.to].push_back(edge.from);
    }
    if (std::find(it->second.begin(), it->second.end(), slot) == it->second.end()) it->second.push_back(slot);
}

auto RefIndex::linked(ElementId a, ElementId b) const -> bool {
    return sources_.count({a, b}) > 0 || sources_.count({b, a}) > 0;
}

auto RefIndex::neighbors(ElementId e) const -> std::vector<ElementId> {
    auto it = adjacent_.find(e);
    if (it == adjacent_.end()) return {};
    auto out = it->second;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

auto RefIndex::edges() const -> std::vector<RefEdge> {
    std::vector<RefEdge> out;
    out.reserve(sources_.size());
    for (const auto& [edge, _] : sources_) out.push_back(edge);
    std::sort(out.begin(), out.end());
    return out;
}

auto RefIndex::sources(RefEdge edge) const -> std::vector<std::string> {
    std::vector<std::string> out;
    auto it = sources_.find(edge);
    if (it == sources_.end()) return out;
    for (auto slot : it->second) out.push_back(source_names_[slot]);
    std::sort(out.begin(), out.end());
    return out;
}

auto build_ref_index(std::span<const IndexSource> sources) -> RefIndex {
    RefIndex index;
    for (const auto& src : sources) {
        if (src.bindings) {
            for (const auto& r : src.bindings->refs) index.add({r.from, r.target}, src.name);
        }
        for (const auto& e : src.extra_edges) index.add(e, src.name);
    }
    return index;
}

auto to_string(DependencyRule rule) -> std::string_view {
    switch (rule) {
        case DependencyRule::same_element: return "same-element";
        case DependencyRule::common_method: return "common-method";
        case DependencyRule::reference: return "reference";
    }
    return "?";
}

auto enclosing_method(ElementId e, const ViewSet& view) -> std::optional<ElementId> {
    const auto& info = view.get(e);
    if (info.method == no_element) return std::nullopt;
    return info.method;
}

auto dependency_rule(ElementId a, ElementId b, const RefIndex& index, const ViewSet& view)
    -> std::optional<DependencyRule> {
    auto ma = enclosing_method(a, view);
    auto mb = enclosing_method(b, view);
    if (a == b) return DependencyRule::same_element;
    if (ma && mb && *ma == *mb) return DependencyRule::common_method;
    if (index.linked(a, b)) return DependencyRule::reference;
    return std::nullopt;
}

auto dependent(ElementId a, ElementId b, const RefIndex& index, const ViewSet& view) -> bool {
    return dependency_rule(a, b, index, view).has_value();
}

auto dependents_of(ElementId e, const RefIndex& index, const ViewSet& view) -> std::vector<ElementId> {
    auto method = enclosing_method(e, view);
    std::vector<ElementId> out;
    for (const auto* info : view.all()) {
        if (info->id == e || (method && info->method == *method) || index.linked(e, info->id)) {
            out.push_back(info->id);
        }
    }
    return out;
}

}  // namespace ssd
