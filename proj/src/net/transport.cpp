#include <ssd/net/transport.hpp>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <map>

namespace ssd::net {

namespace {

constexpr std::size_t max_line = 1 << 20;

auto resolve(const Endpoint& ep, bool passive) -> addrinfo* {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    auto port = std::to_string(ep.port);
    int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw NetError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
    return res;
}

auto errno_text(const std::string& what) -> std::string { return what + ": " + std::strerror(errno); }

void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetError(errno_text("send"));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

struct Client {
    ConnId conn;
    std::string in;
    std::string out;
};

}  // namespace

auto parse_endpoint(std::string_view text) -> std::optional<Endpoint> {
    Endpoint ep;
    auto colon = text.rfind(':');
    auto host = colon == std::string_view::npos ? text : text.substr(0, colon);
    if (!host.empty()) ep.host = std::string(host);
    if (colon != std::string_view::npos) {
        auto port = text.substr(colon + 1);
        unsigned value = 0;
        auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
        if (port.empty() || ec != std::errc{} || p != port.data() + port.size() || value > 65535) return std::nullopt;
        ep.port = static_cast<std::uint16_t>(value);
    }
    if (ep.host.find_first_of(" \t/") != std::string::npos) return std::nullopt;
    return ep;
}

void serve(Hub& hub, const ServeOptions& options) {
    auto* res = resolve(options.listen, true);
    int lfd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (lfd < 0) {
        freeaddrinfo(res);
        throw NetError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(lfd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(lfd, 16) != 0) {
        auto msg = errno_text("cannot listen on " + options.listen.host + ":" + std::to_string(options.listen.port));
        freeaddrinfo(res);
        ::close(lfd);
        throw NetError(msg);
    }
    freeaddrinfo(res);
    ::fcntl(lfd, F_SETFL, O_NONBLOCK);
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(lfd, reinterpret_cast<sockaddr*>(&bound), &len);
    if (options.on_listening) options.on_listening(ntohs(bound.sin_port));

    std::map<int, Client> clients;
    auto drop = [&](int fd) {
        hub.disconnect(clients.at(fd).conn);
        ::close(fd);
        clients.erase(fd);
    };

    while (!(options.stop && options.stop->load())) {
        // Collect hub output before deciding what to poll for.
        for (auto& [fd, c] : clients) {
            for (auto& line : hub.take_output(c.conn)) {
                c.out += line;
                c.out += '\n';
            }
        }
        std::vector<int> finished;
        for (auto& [fd, c] : clients) {
            if (hub.closing(c.conn) && c.out.empty()) finished.push_back(fd);
        }
        for (int fd : finished) drop(fd);

        std::vector<pollfd> fds{{lfd, POLLIN, 0}};
        for (auto& [fd, c] : clients) {
            short events = POLLIN;
            if (!c.out.empty()) events |= POLLOUT;
            fds.push_back({fd, events, 0});
        }
        int rc = ::poll(fds.data(), fds.size(), 100);
        if (rc < 0) {
            if (errno == EINTR) continue;
            ::close(lfd);
            throw NetError(errno_text("poll"));
        }
        if (fds[0].revents & POLLIN) {
            int cfd = ::accept(lfd, nullptr, nullptr);
            if (cfd >= 0) {
                ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                clients[cfd] = Client{hub.connect(), {}, {}};
            }
        }
        for (std::size_t i = 1; i < fds.size(); ++i) {
            int fd = fds[i].fd;
            auto it = clients.find(fd);
            if (it == clients.end()) continue;
            auto& c = it->second;
            if (fds[i].revents & POLLOUT) {
                auto n = ::send(fd, c.out.data(), c.out.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
                if (n > 0) {
                    c.out.erase(0, static_cast<std::size_t>(n));
                } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    drop(fd);
                    continue;
                }
            }
            if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
                char buf[4096];
                auto n = ::recv(fd, buf, sizeof buf, MSG_DONTWAIT);
                if (n <= 0) {
                    if (n < 0 && (errno == EAGAIN || errno == EINTR)) continue;
                    // Peer closed: forget its half-sent line and release the barrier slot.
                    drop(fd);
                    continue;
                }
                c.in.append(buf, static_cast<std::size_t>(n));
                std::size_t nl;
                while ((nl = c.in.find('\n')) != std::string::npos) {
                    auto line = c.in.substr(0, nl);
                    c.in.erase(0, nl + 1);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (!line.empty()) hub.receive(c.conn, line);
                }
                if (c.in.size() > max_line) {
                    hub.receive(c.conn, "line too long");
                    c.in.clear();
                }
            }
        }
    }
    for (auto& [fd, c] : clients) ::close(fd);
    ::close(lfd);
}

LineSocket::LineSocket(const Endpoint& to) {
    auto* res = resolve(to, false);
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
        auto msg = errno_text("cannot connect to " + to.host + ":" + std::to_string(to.port));
        freeaddrinfo(res);
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        throw NetError(msg);
    }
    freeaddrinfo(res);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineSocket::~LineSocket() {
    if (fd_ >= 0) ::close(fd_);
}

void LineSocket::send_line(std::string_view line) {
    std::string data(line);
    data += '\n';
    write_all(fd_, data);
}

auto LineSocket::read_line() -> std::optional<std::string> {
    for (;;) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            auto line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        char buf[4096];
        auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return std::nullopt;
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

}  // namespace ssd::net
