#include <ssd/sim/scenario.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace ssd::sim {

namespace {

auto trim(std::string_view s) -> std::string_view {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename Int>
auto parse_int(std::string_view s, Int& out) -> bool {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

/// Splits on whitespace; double quotes group, `#` outside quotes ends the line.
auto split_words(std::string_view line, std::size_t line_no) -> std::vector<std::string> {
    std::vector<std::string> words;
    std::string cur;
    bool in_word = false;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '\\' && i + 1 < line.size()) {
                cur += line[++i];
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
            continue;
        }
        if (c == '#') break;
        if (c == ' ' || c == '\t' || c == '\r') {
            if (in_word) words.push_back(std::move(cur));
            cur.clear();
            in_word = false;
            continue;
        }
        in_word = true;
        if (c == '"') {
            quoted = true;
        } else {
            cur += c;
        }
    }
    if (quoted) throw ScenarioError(line_no, "unterminated quote");
    if (in_word) words.push_back(std::move(cur));
    return words;
}

auto needs_quotes(std::string_view v) -> bool {
    return v.empty() || v.find_first_of(" \t\"#\\") != std::string_view::npos;
}

auto quote(std::string_view v) -> std::string {
    if (!needs_quotes(v)) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

auto parse_retry(std::string_view v, std::size_t line_no) -> RetryPolicy {
    RetryPolicy r;
    if (v == "fail") return r;
    constexpr std::string_view prefix = "until_granted(";
    if (v.substr(0, prefix.size()) != prefix || v.back() != ')') {
        throw ScenarioError(line_no, "retry must be fail or until_granted(MAX,BACKOFF_MS)");
    }
    auto inner = v.substr(prefix.size(), v.size() - prefix.size() - 1);
    auto comma = inner.find(',');
    if (comma == std::string_view::npos || !parse_int(trim(inner.substr(0, comma)), r.max_attempts) ||
        !parse_int(trim(inner.substr(comma + 1)), r.backoff_ms) || r.max_attempts < 1 || r.backoff_ms < 0) {
        throw ScenarioError(line_no, "bad until_granted arguments");
    }
    r.until_granted = true;
    return r;
}

auto split_list(std::string_view v) -> std::vector<std::string> {
    std::vector<std::string> out;
    while (!v.empty()) {
        auto comma = v.find(',');
        auto item = trim(v.substr(0, comma));
        if (!item.empty()) out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        v = v.substr(comma + 1);
    }
    return out;
}

const std::map<std::string, ActionKind, std::less<>> plain_actions{
    {"expect_denied", ActionKind::expect_denied}, {"expect_error", ActionKind::expect_error},
    {"try_commit", ActionKind::try_commit},       {"checkin", ActionKind::checkin},
    {"revert", ActionKind::revert},               {"off_record", ActionKind::off_record},
    {"on_record", ActionKind::on_record},
};

auto parse_action(const std::vector<std::string>& w, std::size_t line_no, const Scenario& s) -> Action {
    if (w.size() < 3) throw ScenarioError(line_no, "expected: VT DEVELOPER ACTION ...");
    Action a;
    a.line = line_no;
    if (!parse_int(std::string_view(w[0]), a.vt) || a.vt < 0) {
        throw ScenarioError(line_no, "virtual time must be a non-negative integer");
    }
    a.developer = w[1];
    if (std::find(s.developers.begin(), s.developers.end(), a.developer) == s.developers.end()) {
        throw ScenarioError(line_no, "unknown developer '" + a.developer + "'");
    }
    std::vector<std::string> positional;
    std::map<std::string, std::string> keys;
    for (std::size_t i = 3; i < w.size(); ++i) {
        auto eq = w[i].find('=');
        if (eq == std::string::npos) {
            positional.push_back(w[i]);
        } else {
            auto key = w[i].substr(0, eq);
            if (keys.count(key)) throw ScenarioError(line_no, "duplicate key '" + key + "'");
            keys[key] = w[i].substr(eq + 1);
        }
    }
    if (auto it = plain_actions.find(w[2]); it != plain_actions.end()) {
        a.kind = it->second;
        if (!keys.empty()) throw ScenarioError(line_no, w[2] + " takes no key=value arguments");
        if (a.kind == ActionKind::expect_error) {
            if (positional.size() != 1) throw ScenarioError(line_no, "expect_error takes exactly one CODE");
            a.code = positional[0];
        } else if (!positional.empty()) {
            throw ScenarioError(line_no, w[2] + " takes no arguments");
        }
        return a;
    }
    auto kind = op_kind_from_string(w[2]);
    if (!kind) throw ScenarioError(line_no, "unknown action '" + w[2] + "'");
    a.kind = ActionKind::edit;
    a.op.kind = *kind;
    bool wants_target = *kind != OpKind::create_class;
    if (positional.size() != (wants_target ? 1u : 0u)) {
        throw ScenarioError(line_no, w[2] + (wants_target ? " takes one qualified-name target" : " takes no target"));
    }
    if (wants_target) a.op.target_name = positional[0];
    for (const auto& [key, value] : keys) {
        if (key == "name") {
            a.op.name = value;
        } else if (key == "type") {
            a.op.type = value;
        } else if (key == "text") {
            a.op.text = value;
        } else if (key == "block") {
            a.op.block = value;
        } else if (key == "index") {
            std::size_t idx = 0;
            if (!parse_int(std::string_view(value), idx)) throw ScenarioError(line_no, "index must be an integer");
            a.op.index = idx;
        } else if (key == "retry") {
            a.retry = parse_retry(value, line_no);
        } else {
            throw ScenarioError(line_no, "unknown key '" + key + "'");
        }
    }
    return a;
}

}  // namespace

auto to_string(SimMode mode) -> std::string_view {
    switch (mode) {
    case SimMode::ssd: return "ssd";
    case SimMode::baseline: return "baseline";
    case SimMode::both: return "both";
    }
    return "?";
}

auto sim_mode_from_string(std::string_view text) -> std::optional<SimMode> {
    if (text == "ssd") return SimMode::ssd;
    if (text == "baseline") return SimMode::baseline;
    if (text == "both") return SimMode::both;
    return std::nullopt;
}

auto to_string(ActionKind kind) -> std::string_view {
    for (const auto& [name, k] : plain_actions) {
        if (k == kind) return name;
    }
    return "edit";
}

auto parse_scenario(std::string_view text) -> Scenario {
    Scenario s;
    bool saw_format = false;
    bool in_actions = false;
    std::map<std::string, std::int64_t> last_vt;
    std::istringstream lines{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (in_actions) {
            auto words = split_words(line, line_no);
            if (words.empty()) continue;
            auto a = parse_action(words, line_no, s);
            auto [it, fresh] = last_vt.emplace(a.developer, a.vt);
            if (!fresh && a.vt < it->second) {
                throw ScenarioError(line_no, "virtual time decreases for developer '" + a.developer + "'");
            }
            it->second = a.vt;
            s.actions.push_back(std::move(a));
            continue;
        }
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) throw ScenarioError(line_no, "expected 'key: value' header line");
        auto key = trim(line.substr(0, colon));
        auto value = trim(line.substr(colon + 1));
        if (!saw_format && key != "format") throw ScenarioError(line_no, "scenario must start with 'format: 1'");
        if (key == "format") {
            if (value != "1") throw ScenarioError(line_no, "unsupported format '" + std::string(value) + "'");
            saw_format = true;
        } else if (key == "name") {
            s.name = value;
        } else if (key == "project") {
            s.project_path = value;
        } else if (key == "developers") {
            s.developers = split_list(value);
            std::sort(s.developers.begin(), s.developers.end());
            if (std::adjacent_find(s.developers.begin(), s.developers.end()) != s.developers.end()) {
                throw ScenarioError(line_no, "duplicate developer");
            }
        } else if (key == "mode") {
            auto m = sim_mode_from_string(value);
            if (!m) throw ScenarioError(line_no, "mode must be ssd, baseline or both");
            s.mode = *m;
        } else if (key == "auto_commit") {
            if (value != "true" && value != "false") throw ScenarioError(line_no, "auto_commit must be true or false");
            s.auto_commit = value == "true";
        } else if (key == "on_unresolved") {
            if (value == "abort") {
                s.on_unresolved = OnUnresolved::abort;
            } else if (value == "skip") {
                s.on_unresolved = OnUnresolved::skip;
            } else {
                throw ScenarioError(line_no, "on_unresolved must be abort or skip");
            }
        } else if (key == "actions") {
            if (!value.empty()) throw ScenarioError(line_no, "'actions:' must stand alone");
            if (s.developers.empty()) throw ScenarioError(line_no, "developers must be declared before actions");
            in_actions = true;
        } else {
            throw ScenarioError(line_no, "unknown header key '" + std::string(key) + "'");
        }
    }
    if (!saw_format) throw ScenarioError(1, "scenario must start with 'format: 1'");
    if (!in_actions) throw ScenarioError(line_no, "missing 'actions:' section");
    if (s.project_path.empty()) throw ScenarioError(1, "missing 'project:' header");
    return s;
}

auto load_scenario(const std::filesystem::path& path) -> Scenario {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto s = parse_scenario(slurp(path));
    if (s.name.empty()) s.name = path.stem().string();
    s.project_source = slurp(path.parent_path() / s.project_path);
    return s;
}

auto format_scenario(const Scenario& s) -> std::string {
    std::ostringstream out;
    out << "format: 1\n";
    if (!s.name.empty()) out << "name: " << s.name << "\n";
    out << "project: " << s.project_path << "\n";
    out << "developers: ";
    for (std::size_t i = 0; i < s.developers.size(); ++i) out << (i ? ", " : "") << s.developers[i];
    out << "\nmode: " << to_string(s.mode) << "\n";
    if (s.auto_commit) out << "auto_commit: " << (*s.auto_commit ? "true" : "false") << "\n";
    out << "on_unresolved: " << (s.on_unresolved == OnUnresolved::abort ? "abort" : "skip") << "\n";
    out << "\nactions:\n";
    for (const auto& a : s.actions) {
        out << a.vt << " " << a.developer << " ";
        if (a.kind != ActionKind::edit) {
            out << to_string(a.kind);
            if (a.kind == ActionKind::expect_error) out << " " << a.code;
            out << "\n";
            continue;
        }
        out << to_string(a.op.kind);
        if (!a.op.target_name.empty()) out << " " << a.op.target_name;
        if (!a.op.name.empty()) out << " name=" << quote(a.op.name);
        if (!a.op.type.empty()) out << " type=" << quote(a.op.type);
        if (!a.op.text.empty()) out << " text=" << quote(a.op.text);
        if (a.op.index) out << " index=" << *a.op.index;
        if (!a.op.block.empty()) out << " block=" << quote(a.op.block);
        if (a.retry.until_granted) {
            out << " retry=until_granted(" << a.retry.max_attempts << "," << a.retry.backoff_ms << ")";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace ssd::sim
