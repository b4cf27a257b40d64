/// @file hub.hpp
/// @brief Transport-free server core: JSON lines in, JSON lines out, one
/// kernel shared by every connection.
///
/// The socket server feeds received lines to receive() and writes whatever
/// take_output() returns. See docs/protocol.md for the message schema.

#pragma once

#include <ssd/kernel/kernel.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ssd::net {

using ConnId = std::uint64_t;

class Hub {
public:
    explicit Hub(Kernel kernel);
    Hub(const Hub&) = delete;
    auto operator=(const Hub&) -> Hub& = delete;

    /// Each kernel event, as the JSON line broadcast to clients.
    void on_event_line(std::function<void(const std::string&)> sink) { log_ = std::move(sink); }
    /// Milliseconds used for lease expiry while no step barrier is active.
    void set_clock(std::function<std::int64_t()> clock) { clock_ = std::move(clock); }

    auto connect() -> ConnId;
    void receive(ConnId conn, std::string_view line);
    /// Connection lost or closed by the peer; it counts as finished for the
    /// step barrier. Its locks stay until leases expire.
    void disconnect(ConnId conn);

    auto take_output(ConnId conn) -> std::vector<std::string>;
    /// True once the connection should be closed after its output is flushed.
    auto closing(ConnId conn) const -> bool;

    auto kernel() const -> const Kernel& { return kernel_; }
    auto connections() const -> std::size_t { return conns_.size(); }

private:
    // absent: declared, not connected; idle: connected, next step not yet
    // announced. Both block the barrier, as does the peer holding the turn.
    enum class Phase { absent, idle, waiting, parked, turn, done };

    struct Conn {
        std::string dev;  // empty until hello
        bool synced = false;
        bool closing = false;
        std::vector<std::string> out;
    };

    struct Peer {
        Phase phase = Phase::absent;
        ConnId conn = 0;
        std::int64_t ready = 0;
        nlohmann::json pending_id;  // step or park request awaiting go
        std::string holder;
        std::int64_t backoff = 0;
    };

    void handle(ConnId conn, Conn& c, const nlohmann::json& req);
    void reply(ConnId conn, nlohmann::json msg);
    void error(ConnId conn, const nlohmann::json& id, const std::string& code, const std::string& message);
    void violation(ConnId conn, const nlohmann::json& id, const std::string& message);
    void on_kernel_event(const KernelEvent& e);
    void pump();
    auto now() const -> std::int64_t;

    Kernel kernel_;
    std::map<ConnId, Conn> conns_;
    ConnId next_conn_ = 1;
    std::function<void(const std::string&)> log_;
    std::function<std::int64_t()> clock_;
    // step barrier
    std::map<std::string, Peer> peers_;
    std::optional<std::int64_t> vt_;
};

}  // namespace ssd::net
