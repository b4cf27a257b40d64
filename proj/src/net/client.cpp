#include <ssd/net/client.hpp>

#include <algorithm>

namespace ssd::net {

using nlohmann::json;
using sim::Action;
using sim::ActionKind;

namespace {

class Session {
public:
    Session(const Endpoint& ep, std::ostream* out) : sock_(ep), out_(out) {}

    /// Sends a request and returns its correlated response, printing every
    /// line that arrives meanwhile. Protocol errors end the session.
    auto request(json req) -> json {
        req["id"] = next_id_++;
        sock_.send_line(req.dump());
        for (;;) {
            auto line = sock_.read_line();
            if (!line) throw NetError("connection closed by server");
            if (out_) *out_ << *line << '\n';
            auto msg = json::parse(*line, nullptr, false);
            if (msg.is_discarded() || !msg.is_object()) throw NetError("unparseable line from server");
            if (msg.value("t", "") == "error" && msg.value("code", "") == "proto") {
                throw NetError("protocol error: " + msg.value("message", ""));
            }
            if (msg.contains("id") && msg["id"] == req["id"]) return msg;
        }
    }

private:
    LineSocket sock_;
    std::ostream* out_;
    std::int64_t next_id_ = 1;
};

class Replayer {
public:
    Replayer(Session& session, const ClientOptions& o) : s_(session), o_(o) {
        for (const auto& a : o.script.actions) {
            if (a.developer == o.developer) mine_.push_back(&a);
        }
    }

    void run() {
        json peers = json::array();
        for (const auto& d : o_.script.developers) peers.push_back(d);
        s_.request({{"t", "hello"}, {"dev", o_.developer}, {"peers", peers}});
        for (i_ = 0; i_ < mine_.size() && !aborted_; ++i_) action(*mine_[i_]);
        if (!mine_.empty()) s_.request({{"t", "get_snapshot"}});
        s_.request({{"t", "bye"}});
    }

    auto failures() const -> const std::vector<std::string>& { return failures_; }

private:
    void action(const Action& a) {
        auto t = std::max(a.vt, clock_);
        if (a.kind == ActionKind::expect_denied) {
            if (!last_denied_) fail(a, "expect_denied: the last edit of " + o_.developer + " was not denied");
            clock_ = t;
            return;
        }
        if (a.kind == ActionKind::expect_error) {
            if (last_error_ != a.code) {
                fail(a, "expect_error " + a.code + ": got " + (last_error_.empty() ? "no error" : last_error_));
            }
            clock_ = t;
            return;
        }
        if (!go(s_.request({{"t", "step"}, {"vt", t}}), a)) return;
        last_error_.clear();
        switch (a.kind) {
        case ActionKind::edit: edit(a); break;
        case ActionKind::try_commit:
        case ActionKind::checkin: {
            auto r = s_.request({{"t", "commit"}});
            if (is_error(r)) {
                if (r["code"] != "empty-overlay") error(a, r);
            } else if (!r["committed"].get<bool>()) {
                last_error_ = "unbuildable";
            }
            break;
        }
        case ActionKind::revert: check(a, s_.request({{"t", "revert"}})); break;
        case ActionKind::off_record: check(a, s_.request({{"t", "set_mode"}, {"mode", "off_record"}})); break;
        case ActionKind::on_record: check(a, s_.request({{"t", "set_mode"}, {"mode", "on_record"}})); break;
        default: break;
        }
    }

    /// Consumes a go message; false when the server cancelled the wait.
    auto go(const json& msg, const Action& a) -> bool {
        if (msg.value("t", "") != "go") throw NetError("expected go, got " + msg.dump());
        clock_ = msg["vt"].get<std::int64_t>();
        if (!msg["cancelled"].get<bool>()) return true;
        unresolved(a, o_.developer + " waits forever on " + holder_);
        return false;
    }

    void edit(const Action& a) {
        last_denied_ = false;
        json op = to_json(a.op);
        for (int attempt = 1;; ++attempt) {
            auto r = s_.request({{"t", "edit"}, {"op", op}});
            if (is_error(r)) return error(a, r);
            if (r["granted"].get<bool>()) return;
            if (attempt == 1) last_denied_ = true;
            if (!a.retry.until_granted) return;
            if (attempt >= a.retry.max_attempts) {
                return unresolved(a, "edit of " + o_.developer + " still denied after " + std::to_string(attempt) +
                                         " attempts");
            }
            holder_ = r["denial"]["holder"].get<std::string>();
            op = r["op"];  // target now fixed by id
            auto woken = s_.request({{"t", "park"}, {"holder", holder_}, {"backoff", a.retry.backoff_ms}});
            if (!go(woken, a)) return;
        }
    }

    static auto is_error(const json& r) -> bool { return r.value("t", "") == "error"; }

    void check(const Action& a, const json& r) {
        if (is_error(r)) error(a, r);
    }

    void error(const Action& a, const json& r) {
        last_error_ = r["code"].get<std::string>();
        bool expected = i_ + 1 < mine_.size() && mine_[i_ + 1]->kind == ActionKind::expect_error;
        if (!expected) unresolved(a, last_error_ + ": " + r.value("message", ""));
    }

    void unresolved(const Action& a, const std::string& message) {
        if (o_.script.on_unresolved == sim::OnUnresolved::skip) return;
        failures_.push_back("line " + std::to_string(a.line) + ": " + message);
        aborted_ = true;
    }

    void fail(const Action& a, const std::string& message) {
        failures_.push_back("line " + std::to_string(a.line) + ": " + message);
        aborted_ = true;
    }

    Session& s_;
    const ClientOptions& o_;
    std::vector<const Action*> mine_;
    std::size_t i_ = 0;
    std::int64_t clock_ = 0;
    bool last_denied_ = false;
    std::string last_error_;
    std::string holder_;
    bool aborted_ = false;
    std::vector<std::string> failures_;
};

}  // namespace

auto run_client(const ClientOptions& options) -> ClientOutcome {
    ClientOutcome out;
    try {
        Session session(options.server, options.out);
        Replayer replayer(session, options);
        replayer.run();
        out.failures = replayer.failures();
        out.exit_code = out.failures.empty() ? 0 : 1;
    } catch (const NetError& e) {
        out.failures.push_back(e.what());
        out.exit_code = 3;
    } catch (const nlohmann::json::exception& e) {
        out.failures.push_back(std::string("malformed server message: ") + e.what());
        out.exit_code = 3;
    }
    return out;
}

}  // namespace ssd::net
