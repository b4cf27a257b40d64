#include "support.hpp"

#include "kernel/invariants.hpp"
#include "net/transcript.hpp"

#include <ssd/sim/simulator.hpp>

#include <cstdlib>
#include <filesystem>

using namespace ssd;

namespace {

auto golden_dir() -> std::filesystem::path { return test::source_dir() / "tests" / "golden" / "wire"; }

auto updating() -> bool { return std::getenv("SSD_UPDATE_GOLDEN") != nullptr; }

auto replay(const std::string& name) -> test::Transcript {
    auto path = golden_dir() / name;
    auto expected = test::read_file(path);
    auto got = test::render_transcript(expected);
    if (updating()) {
        std::ofstream(path, std::ios::binary) << got.text;
    } else {
        CHECK_MESSAGE(got.text == expected, "transcript drifted: " << name);
    }
    return got;
}

auto lines_of(const std::string& text, const std::string& prefix) -> std::vector<nlohmann::json> {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) out.push_back(nlohmann::json::parse(line.substr(prefix.size())));
    }
    return out;
}

}  // namespace

TEST_CASE("golden transcripts replay byte for byte") {
    std::size_t seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(golden_dir())) {
        if (entry.path().extension() != ".txt") continue;
        CAPTURE(entry.path().filename().string());
        auto t = replay(entry.path().filename().string());
        ++seen;
        // Every request gets exactly one correlated response.
        std::map<std::string, std::size_t> requests, responses;
        std::istringstream in(t.text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.size() < 2 || (line[0] != '>' && line[0] != '<')) continue;
            auto rest = line.substr(2);
            auto conn = rest.substr(0, rest.find(' '));
            auto j = nlohmann::json::parse(rest.substr(conn.size() + 1), nullptr, false);
            if (j.is_discarded() || !j.contains("id") || j["id"].is_null()) continue;
            (line[0] == '>' ? requests : responses)[conn + "#" + j["id"].dump()]++;
        }
        for (const auto& [key, n] : responses) CHECK_MESSAGE(n == 1, key);
        // Events carry no id; requests dropped after a violation have no response.
        for (const auto& [key, n] : requests) CHECK_MESSAGE(responses.count(key) + (n == 1 ? 0 : 1) <= 1, key);
    }
    CHECK(seen >= 6);
}

TEST_CASE("empty script: hello, hello_ack, bye") {
    auto t = replay("empty_script.txt");
    auto out = lines_of(t.text, "< carol ");
    REQUIRE(out.size() == 2);
    CHECK(out[0]["t"] == "hello_ack");
    CHECK(out[1]["t"] == "bye_ack");
    CHECK(t.event_log.empty());
}

TEST_CASE("use case over the hub matches the simulator") {
    auto t = replay("usecase.txt");
    std::vector<std::string> sim_log;
    auto r = sim::run_scenario(sim::load_scenario(test::source_dir() / "scenarios" / "usecase.ssd"), sim::SimMode::ssd);
    for (const auto& e : r.kernel_events) sim_log.push_back(to_json(e).dump());
    CHECK(t.event_log == sim_log);
    // Alice's rename only lands after Bob's commit event reached her.
    auto alice = lines_of(t.text, "< alice ");
    std::size_t bob_commit = 0, alice_grant = 0;
    for (std::size_t i = 0; i < alice.size(); ++i) {
        if (alice[i]["t"] == "committed" && alice[i]["dev"] == "bob") bob_commit = i;
        if (alice[i]["t"] == "edit_result" && alice[i]["granted"] == true) alice_grant = i;
    }
    CHECK(bob_commit > 0);
    CHECK(alice_grant > bob_commit);
    auto bob = lines_of(t.text, "< bob ");
    auto snap = std::find_if(bob.begin(), bob.end(), [](const auto& j) { return j["t"] == "snapshot"; });
    REQUIRE(snap != bob.end());
    CHECK((*snap)["text"].get<std::string>().find("Foo2(int i, int newParam)") != std::string::npos);
}

TEST_CASE("protocol violations close only the offending connection") {
    auto t = replay("proto_error.txt");
    auto bob = lines_of(t.text, "< bob ");
    REQUIRE(bob.size() == 2);
    CHECK(bob[1]["t"] == "error");
    CHECK(bob[1]["code"] == "proto");
    CHECK(bob[1]["id"].is_null());
    for (const auto* who : {"< carol ", "< dave ", "< erin ", "< frank "}) {
        auto out = lines_of(t.text, who);
        REQUIRE(!out.empty());
        CHECK(out.back()["code"] == "proto");
    }
    auto alice = lines_of(t.text, "< alice ");
    CHECK(alice.back()["t"] == "snapshot");
    CHECK(alice.back()["text"].get<std::string>().find("int counter = 1;") != std::string::npos);
}

TEST_CASE("lease expiry after a crash keeps the kernel consistent") {
    auto t = replay("lease.txt");
    auto bob = lines_of(t.text, "< bob ");
    std::vector<nlohmann::json> results;
    for (const auto& j : bob) {
        if (j["t"] == "edit_result") results.push_back(j);
    }
    REQUIRE(results.size() == 2);
    CHECK(results[0]["granted"] == false);
    CHECK(results[1]["granted"] == true);
    bool expired = std::any_of(bob.begin(), bob.end(), [](const auto& j) {
        return j["t"] == "reverted" && j["dev"] == "alice" && j["reason"] == "lease-expired";
    });
    CHECK(expired);
    const auto& k = t.hub->kernel();
    CHECK(test::lock_disjointness(k).empty());
    CHECK(test::overlay_consistency(k).empty());
    CHECK(test::gate_invariant(k).empty());
    CHECK(k.locks_of("alice").empty());
}

TEST_CASE("off-record return reports the reconcile conflict") {
    auto t = replay("off_record.txt");
    auto alice = lines_of(t.text, "< alice ");
    auto r = std::find_if(alice.begin(), alice.end(), [](const auto& j) { return j["t"] == "set_mode_result" && j["mode"] == "on_record"; });
    REQUIRE(r != alice.end());
    CHECK((*r)["reconcile"]["clean"] == false);
    CHECK(alice.back()["text"].get<std::string>().find("return 0;") != std::string::npos);
}

TEST_CASE("synced peers that vanish do not stall the barrier") {
    net::Hub hub(Kernel::from_source({test::sample("usecase.mj"), "usecase.mj"}));
    auto a = hub.connect();
    auto b = hub.connect();
    hub.receive(a, R"({"id":1,"t":"hello","dev":"a","peers":["a","b","c"]})");
    hub.receive(b, R"({"id":1,"t":"hello","dev":"b","peers":["a","b"]})");
    hub.receive(a, R"({"id":2,"t":"step","vt":5})");
    hub.take_output(a);
    hub.take_output(b);
    hub.receive(b, R"({"id":2,"t":"step","vt":1})");
    CHECK(hub.take_output(b).empty());  // c never showed up
    auto c = hub.connect();
    hub.receive(c, R"({"id":1,"t":"hello","dev":"c","peers":["c"]})");
    hub.take_output(c);
    hub.disconnect(c);
    auto go_b = hub.take_output(b);
    REQUIRE(go_b.size() == 1);
    CHECK(nlohmann::json::parse(go_b[0])["vt"] == 1);
    hub.disconnect(b);
    auto go_a = hub.take_output(a);
    REQUIRE(go_a.size() == 1);
    CHECK(nlohmann::json::parse(go_a[0])["vt"] == 5);
}
