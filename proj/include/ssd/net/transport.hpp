/// @file transport.hpp
/// @brief Line-oriented TCP plumbing for the hub: a poll() server loop and a
/// blocking client socket.

#pragma once

#include <ssd/net/hub.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ssd::net {

inline constexpr std::uint16_t default_port = 7457;

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = default_port;
};

/// Accepts HOST:PORT, HOST, or :PORT. Port 0 asks the OS for a free port
/// when listening.
auto parse_endpoint(std::string_view text) -> std::optional<Endpoint>;

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ServeOptions {
    Endpoint listen;
    std::function<void(std::uint16_t port)> on_listening;
    const std::atomic<bool>* stop = nullptr;  // polled every 100 ms
};

/// Runs until *stop becomes true. Throws NetError if the address cannot be bound.
void serve(Hub& hub, const ServeOptions& options);

class LineSocket {
public:
    /// Throws NetError when the connection is refused.
    explicit LineSocket(const Endpoint& to);
    ~LineSocket();
    LineSocket(const LineSocket&) = delete;
    auto operator=(const LineSocket&) -> LineSocket& = delete;

    void send_line(std::string_view line);
    /// Next line without its newline; nullopt once the peer has closed.
    auto read_line() -> std::optional<std::string>;

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace ssd::net
