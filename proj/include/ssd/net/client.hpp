/// @file client.hpp
/// @brief Replays one developer's part of a scenario script against a server.

#pragma once

#include <ssd/net/transport.hpp>
#include <ssd/sim/scenario.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace ssd::net {

struct ClientOptions {
    Endpoint server;
    std::string developer;
    sim::Scenario script;
    std::ostream* out = nullptr;  // every line received, in arrival order
};

struct ClientOutcome {
    int exit_code = 0;  // 0 ok, 1 assertion or unresolved action, 3 connection or protocol
    std::vector<std::string> failures;
};

/// Runs the developer's actions in script order. Every step waits on the
/// server's virtual-time barrier (peers = the script's developers), so several
/// clients interleave exactly as the in-process simulator would.
auto run_client(const ClientOptions& options) -> ClientOutcome;

}  // namespace ssd::net
