#include <ssd/net/hub.hpp>

#include <algorithm>

namespace ssd::net {

using nlohmann::json;

namespace {

auto ids_json(const std::vector<ElementId>& ids) -> json {
    json out = json::array();
    for (auto id : ids) out.push_back(id);
    return out;
}

auto reconcile_json(const ReconcileResult& r) -> json {
    json blocking = json::array();
    for (const auto& b : r.blocking) {
        blocking.push_back({{"requested", b.requested}, {"holder", b.holder}, {"held", b.held}, {"rule", b.rule}});
    }
    json out{{"clean", r.clean}, {"ops", r.ops}, {"blocking", blocking}, {"changed", ids_json(r.changed)}};
    if (!r.replay_error.empty()) out["error"] = r.replay_error;
    return out;
}

auto is_release(const KernelEvent& e) -> bool {
    return e.kind == EventKind::committed || e.kind == EventKind::reverted ||
           (e.kind == EventKind::reconcile_result && !e.details.value("clean", true));
}

}  // namespace

Hub::Hub(Kernel kernel) : kernel_(std::move(kernel)) {
    kernel_.on_event([this](const KernelEvent& e) { on_kernel_event(e); });
}

auto Hub::connect() -> ConnId {
    auto id = next_conn_++;
    conns_[id];
    return id;
}

void Hub::receive(ConnId conn, std::string_view line) {
    auto it = conns_.find(conn);
    if (it == conns_.end() || it->second.closing) return;
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object()) {
        violation(conn, nullptr, "not a JSON object");
    } else if (!req.contains("id") || !(req["id"].is_number_integer() || req["id"].is_string())) {
        violation(conn, nullptr, "request without an integer or string id");
    } else if (!req.contains("t") || !req["t"].is_string()) {
        violation(conn, req["id"], "request without a type");
    } else {
        try {
            handle(conn, it->second, req);
        } catch (const KernelError& e) {
            error(conn, req["id"], e.code(), e.what());
        } catch (const OpError& e) {
            error(conn, req["id"], e.code(), e.what());
        } catch (const json::exception& e) {
            violation(conn, req["id"], std::string("bad field: ") + e.what());
        }
    }
    pump();
}

void Hub::handle(ConnId conn, Conn& c, const json& req) {
    const auto& id = req["id"];
    const auto t = req["t"].get<std::string>();

    if (t == "hello") {
        if (!c.dev.empty()) return violation(conn, id, "second hello");
        auto dev = req.at("dev").get<std::string>();
        if (dev.empty()) return violation(conn, id, "empty developer name");
        for (const auto& [other, oc] : conns_) {
            if (other != conn && oc.dev == dev && !oc.closing) {
                return error(conn, id, "dev-in-use", dev + " is already connected");
            }
        }
        kernel_.add_developer(dev);
        c.dev = dev;
        if (req.contains("peers")) {
            c.synced = true;
            for (const auto& p : req["peers"]) peers_[p.get<std::string>()];
            auto& me = peers_[dev];
            me.phase = Phase::idle;
            me.conn = conn;
        }
        auto view = kernel_.snapshot_of(dev);
        return reply(conn, {{"t", "hello_ack"},
                            {"id", id},
                            {"dev", dev},
                            {"snapshot", view.text()},
                            {"version", kernel_.version()},
                            {"mode", std::string(to_string(view.mode))}});
    }
    if (c.dev.empty()) return violation(conn, id, "'" + t + "' before hello");
    const auto& dev = c.dev;

    if (t == "edit") {
        auto op = edit_op_from_json(req.at("op"));
        auto r = kernel_.request_edit(dev, std::move(op), now());
        json denial = nullptr;
        if (r.denial) {
            denial = {{"holder", r.denial->holder},
                      {"requested", r.denial->requested},
                      {"held", r.denial->held},
                      {"rule", r.denial->rule}};
        }
        json committed = nullptr;
        if (r.committed_version) committed = *r.committed_version;
        return reply(conn, {{"t", "edit_result"},
                            {"id", id},
                            {"granted", r.granted},
                            {"op", to_json(r.op)},
                            {"touched", ids_json(r.touched)},
                            {"buildable", r.report.buildable},
                            {"denial", denial},
                            {"committed_version", committed}});
    }
    if (t == "commit") {
        auto r = kernel_.try_commit(dev, now());
        return reply(conn, {{"t", "commit_result"},
                            {"id", id},
                            {"committed", r.committed},
                            {"version", r.version},
                            {"buildable", r.report.buildable}});
    }
    if (t == "revert") {
        kernel_.revert(dev, now());
        return reply(conn, {{"t", "revert_result"}, {"id", id}});
    }
    if (t == "set_mode") {
        auto name = req.at("mode").get<std::string>();
        if (name != "on_record" && name != "off_record") return violation(conn, id, "unknown mode '" + name + "'");
        auto r = kernel_.set_mode(dev, name == "on_record" ? Mode::on_record : Mode::off_record, now());
        return reply(conn, {{"t", "set_mode_result"},
                            {"id", id},
                            {"mode", name},
                            {"reconcile", r ? reconcile_json(*r) : json(nullptr)}});
    }
    if (t == "get_snapshot") {
        auto view = kernel_.snapshot_of(dev);
        return reply(conn, {{"t", "snapshot"},
                            {"id", id},
                            {"text", view.text()},
                            {"version", kernel_.version()},
                            {"base_version", view.base_version},
                            {"pending", view.pending},
                            {"mode", std::string(to_string(view.mode))}});
    }
    if (t == "step" || t == "park") {
        if (!c.synced) return violation(conn, id, "'" + t + "' without peers in hello");
        auto& me = peers_[dev];
        if (me.phase == Phase::waiting || me.phase == Phase::parked) return violation(conn, id, "already waiting");
        me.conn = conn;
        me.pending_id = id;
        if (t == "step") {
            auto vt = req.at("vt").get<std::int64_t>();
            if (vt < 0) return violation(conn, id, "negative vt");
            me.phase = Phase::waiting;
            me.ready = vt;
        } else {
            me.phase = Phase::parked;
            me.holder = req.at("holder").get<std::string>();
            me.backoff = std::max<std::int64_t>(0, req.at("backoff").get<std::int64_t>());
        }
        return;
    }
    if (t == "bye") {
        reply(conn, {{"t", "bye_ack"}, {"id", id}});
        c.closing = true;
        if (c.synced) {
            peers_[dev].phase = Phase::done;
        }
        return;
    }
    violation(conn, id, "unknown request type '" + t + "'");
}

void Hub::disconnect(ConnId conn) {
    auto it = conns_.find(conn);
    if (it == conns_.end()) return;
    if (it->second.synced) {
        auto p = peers_.find(it->second.dev);
        if (p != peers_.end() && p->second.conn == conn) p->second.phase = Phase::done;
    }
    conns_.erase(it);
    pump();
}

auto Hub::take_output(ConnId conn) -> std::vector<std::string> {
    auto it = conns_.find(conn);
    if (it == conns_.end()) return {};
    return std::exchange(it->second.out, {});
}

auto Hub::closing(ConnId conn) const -> bool {
    auto it = conns_.find(conn);
    return it == conns_.end() || it->second.closing;
}

void Hub::reply(ConnId conn, json msg) {
    auto it = conns_.find(conn);
    if (it != conns_.end()) it->second.out.push_back(msg.dump());
}

void Hub::error(ConnId conn, const json& id, const std::string& code, const std::string& message) {
    reply(conn, {{"t", "error"}, {"id", id}, {"code", code}, {"message", message}});
}

void Hub::violation(ConnId conn, const json& id, const std::string& message) {
    error(conn, id, "proto", message);
    auto it = conns_.find(conn);
    if (it == conns_.end()) return;
    it->second.closing = true;
    if (it->second.synced) {
        auto p = peers_.find(it->second.dev);
        if (p != peers_.end() && p->second.conn == conn) p->second.phase = Phase::done;
    }
}

void Hub::on_kernel_event(const KernelEvent& e) {
    auto line = to_json(e).dump();
    if (log_) log_(line);
    for (auto& [_, c] : conns_) {
        if (!c.dev.empty() && !c.closing) c.out.push_back(line);
    }
    if (!is_release(e)) return;
    for (auto& [name, p] : peers_) {
        if (p.phase == Phase::parked && p.holder == e.developer) {
            p.phase = Phase::waiting;
            p.ready = vt_.value_or(0) + p.backoff;
        }
    }
}

/// Grants the next step once every declared peer is waiting, parked or done.
/// Ties on virtual time go to the lexicographically smaller developer.
void Hub::pump() {
    if (peers_.empty()) return;
    for (const auto& [_, p] : peers_) {
        if (p.phase == Phase::absent || p.phase == Phase::idle || p.phase == Phase::turn) return;
    }
    std::string best;
    for (const auto& [name, p] : peers_) {
        if (p.phase == Phase::waiting && (best.empty() || p.ready < peers_[best].ready)) best = name;
    }
    bool cancelled = false;
    if (best.empty()) {
        // Only parked peers left: nobody will release, cancel the first wait.
        for (const auto& [name, p] : peers_) {
            if (p.phase == Phase::parked) {
                best = name;
                cancelled = true;
                break;
            }
        }
    }
    if (best.empty()) {
        // Everyone finished; the next synced session starts afresh.
        peers_.clear();
        vt_.reset();
        return;
    }
    auto& p = peers_[best];
    if (!cancelled) vt_ = p.ready;
    p.phase = Phase::turn;
    reply(p.conn, {{"t", "go"}, {"id", p.pending_id}, {"vt", vt_.value_or(0)}, {"cancelled", cancelled}});
}

auto Hub::now() const -> std::int64_t {
    if (vt_) return *vt_;
    return clock_ ? clock_() : 0;
}

}  // namespace ssd::net
