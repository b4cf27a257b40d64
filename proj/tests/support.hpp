#pragma once

#include <ssd/minilang/parser.hpp>
#include <ssd/semantics/semantics.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace ssd::test {

inline auto source_dir() -> std::filesystem::path { return SSD_SOURCE_DIR; }

inline auto read_file(const std::filesystem::path& p) -> std::string {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline auto sample(const std::string& name) -> std::string { return read_file(source_dir() / "samples" / name); }

/// Parses and numbers; fails the test on diagnostics.
inline auto parse_numbered(const std::string& text) -> Ast {
    auto parsed = parse_unit(text);
    REQUIRE_MESSAGE(parsed.ok(), (parsed.diagnostics.empty() ? "" : parsed.diagnostics.front().message));
    number_elements(*parsed.value);
    return std::move(*parsed.value);
}

}  // namespace ssd::test
