// ssd: server, client, simulator and analysis front end.
//
// Exit codes: 0 ok, 1 assertion or conflict, 2 usage, 3 I/O or protocol.

#include <ssd/depcore/dependency.hpp>
#include <ssd/kernel/kernel.hpp>
#include <ssd/minilang/parser.hpp>
#include <ssd/net/client.hpp>
#include <ssd/net/hub.hpp>
#include <ssd/net/transport.hpp>
#include <ssd/sim/simulator.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

enum Exit : int { ok = 0, failed = 1, usage = 2, io = 3 };

std::atomic<bool> stop_requested{false};

extern "C" void on_signal(int) { stop_requested = true; }

auto read_file(const std::string& path) -> std::optional<std::string> {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto write_file(const std::string& path, const std::string& text) -> bool {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

auto endpoint(const std::string& text, ssd::net::Endpoint& out) -> bool {
    auto ep = ssd::net::parse_endpoint(text);
    if (!ep) {
        std::cerr << "ssd: bad address '" << text << "', expected HOST:PORT\n";
        return false;
    }
    out = *ep;
    return true;
}

struct ServeArgs {
    std::string listen = "127.0.0.1:" + std::to_string(ssd::net::default_port);
    std::string project;
    std::string config;
    std::string session_log;
};

auto cmd_serve(const ServeArgs& a) -> int {
    ssd::net::Endpoint ep;
    if (!endpoint(a.listen, ep)) return usage;
    auto source = read_file(a.project);
    if (!source) {
        std::cerr << "ssd: cannot read " << a.project << "\n";
        return io;
    }
    ssd::KernelConfig cfg;
    if (!a.config.empty()) {
        try {
            cfg = ssd::load_config(a.config);
        } catch (const std::invalid_argument& e) {
            std::cerr << "ssd: " << a.config << ": " << e.what() << "\n";
            return usage;
        } catch (const std::exception& e) {
            std::cerr << "ssd: " << e.what() << "\n";
            return io;
        }
    }
    std::ofstream log;
    if (!a.session_log.empty()) {
        log.open(a.session_log, std::ios::binary | std::ios::trunc);
        if (!log) {
            std::cerr << "ssd: cannot write " << a.session_log << "\n";
            return io;
        }
    }
    try {
        ssd::net::Hub hub(ssd::Kernel::from_source({*source, a.project}, cfg));
        if (log.is_open()) {
            hub.on_event_line([&](const std::string& line) { log << line << '\n' << std::flush; });
        }
        auto start = std::chrono::steady_clock::now();
        hub.set_clock([start] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                .count();
        });
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        ssd::net::ServeOptions opts;
        opts.listen = ep;
        opts.stop = &stop_requested;
        opts.on_listening = [&](std::uint16_t port) {
            std::cout << "listening on " << ep.host << ":" << port << std::endl;
        };
        ssd::net::serve(hub, opts);
    } catch (const ssd::KernelError& e) {
        std::cerr << "ssd: " << e.what() << "\n";
        return io;
    } catch (const ssd::net::NetError& e) {
        std::cerr << "ssd: " << e.what() << "\n";
        return io;
    }
    return ok;
}

struct ClientArgs {
    std::string connect = "127.0.0.1:" + std::to_string(ssd::net::default_port);
    std::string dev;
    std::string script;
};

auto cmd_client(const ClientArgs& a) -> int {
    ssd::net::ClientOptions opts;
    if (!endpoint(a.connect, opts.server)) return usage;
    auto text = read_file(a.script);
    if (!text) {
        std::cerr << "ssd: cannot read " << a.script << "\n";
        return io;
    }
    try {
        opts.script = ssd::sim::parse_scenario(*text);
    } catch (const ssd::sim::ScenarioError& e) {
        std::cerr << "ssd: " << a.script << ": " << e.what() << "\n";
        return usage;
    }
    auto& devs = opts.script.developers;
    if (std::find(devs.begin(), devs.end(), a.dev) == devs.end()) {
        std::cerr << "ssd: " << a.dev << " is not a developer of " << a.script << "\n";
        return usage;
    }
    opts.developer = a.dev;
    opts.out = &std::cout;
    auto outcome = ssd::net::run_client(opts);
    std::cout << std::flush;
    for (const auto& f : outcome.failures) std::cerr << "ssd: " << f << "\n";
    return outcome.exit_code;
}

auto load(const std::string& path, ssd::sim::Scenario& out) -> int {
    try {
        out = ssd::sim::load_scenario(path);
    } catch (const ssd::sim::ScenarioError& e) {
        std::cerr << "ssd: " << path << ": " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "ssd: " << e.what() << "\n";
        return io;
    }
    return ok;
}

auto simulate(const ssd::sim::Scenario& s, ssd::sim::SimMode mode, ssd::sim::SimResult& out) -> int {
    try {
        out = ssd::sim::run_scenario(s, mode);
    } catch (const ssd::KernelError& e) {
        std::cerr << "ssd: " << e.what() << "\n";
        return io;
    }
    return ok;
}

struct SimRunArgs {
    std::string scenario;
    std::string mode;
    std::string trace;
    std::string report;
};

auto cmd_sim_run(const SimRunArgs& a) -> int {
    ssd::sim::Scenario s;
    if (int rc = load(a.scenario, s)) return rc;
    auto mode = s.mode;
    if (!a.mode.empty()) mode = *ssd::sim::sim_mode_from_string(a.mode);
    ssd::sim::SimResult r;
    if (int rc = simulate(s, mode, r)) return rc;
    std::cout << ssd::sim::format_table(r);
    if (!a.trace.empty() && !write_file(a.trace, ssd::sim::format_trace(r))) {
        std::cerr << "ssd: cannot write " << a.trace << "\n";
        return io;
    }
    if (!a.report.empty() && !write_file(a.report, ssd::sim::format_report(r))) {
        std::cerr << "ssd: cannot write " << a.report << "\n";
        return io;
    }
    for (const auto& f : r.failures) std::cerr << "ssd: " << f << "\n";
    return r.ok() ? ok : failed;
}

auto cmd_sim_compare(const std::string& path) -> int {
    ssd::sim::Scenario s;
    if (int rc = load(path, s)) return rc;
    ssd::sim::SimResult r;
    if (int rc = simulate(s, ssd::sim::SimMode::both, r)) return rc;
    std::cout << ssd::sim::format_table(r) << "\n" << ssd::sim::format_report(r);
    for (const auto& f : r.failures) std::cerr << "ssd: " << f << "\n";
    return r.ok() ? ok : failed;
}

auto cmd_check(const std::string& path) -> int {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "ssd: cannot read " << path << "\n";
        return io;
    }
    auto outcome = ssd::check_source({*text, path});
    for (const auto& e : outcome.gate.report.errors) {
        auto lc = ssd::line_col(*text, e.span.begin);
        std::cout << "ERROR " << e.code << " " << lc.line << ":" << lc.column << " " << e.message << "\n";
    }
    return outcome.gate.report.buildable ? ok : failed;
}

auto cmd_deps(const std::string& path, const std::string& element) -> int {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "ssd: cannot read " << path << "\n";
        return io;
    }
    auto outcome = ssd::check_source({*text, path});
    if (!outcome.ast) {
        for (const auto& e : outcome.gate.report.errors) std::cerr << "ssd: " << e.code << " " << e.message << "\n";
        return failed;
    }
    auto view = ssd::View::build(std::move(*outcome.ast));
    auto id = view->elements.lookup(element);
    if (!id) {
        std::cerr << "ssd: no element named '" << element << "'\n";
        return usage;
    }
    std::vector<ssd::IndexSource> sources{{"file", &view->bindings, {}}};
    auto index = ssd::build_ref_index(sources);
    std::vector<std::string> names;
    for (auto d : ssd::dependents_of(*id, index, view->elements)) names.push_back(view->elements.find(d)->qualified_name);
    std::sort(names.begin(), names.end());
    for (const auto& n : names) std::cout << n << "\n";
    return ok;
}

}  // namespace

auto main(int argc, char** argv) -> int {
    CLI::App app{"Synchronized software development: lock server, client, simulator and analysis tools", "ssd"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the kernel behind a TCP endpoint");
    serve_cmd->add_option("--listen", serve.listen, "HOST:PORT to listen on")->capture_default_str();
    serve_cmd->add_option("--project", serve.project, "MiniJ project file")->required();
    serve_cmd->add_option("--config", serve.config, "key = value config file");
    serve_cmd->add_option("--session-log", serve.session_log, "Append every kernel event here");

    ClientArgs client;
    auto* client_cmd = app.add_subcommand("client", "Replay one developer's part of a scenario script");
    client_cmd->add_option("--connect", client.connect, "HOST:PORT of the server")->capture_default_str();
    client_cmd->add_option("--dev", client.dev, "Developer name")->required();
    client_cmd->add_option("--script", client.script, "Scenario file")->required();

    auto* sim_cmd = app.add_subcommand("sim", "Deterministic simulator");
    sim_cmd->require_subcommand(1);
    SimRunArgs run;
    auto* run_cmd = sim_cmd->add_subcommand("run", "Run one scenario");
    run_cmd->add_option("scenario", run.scenario, "Scenario file")->required();
    run_cmd->add_option("--mode", run.mode, "ssd, baseline or both (default: the scenario header)")
        ->check(CLI::IsMember({"ssd", "baseline", "both"}));
    run_cmd->add_option("--trace", run.trace, "Write the trace here");
    run_cmd->add_option("--report", run.report, "Write the key=value report here");
    std::string compare_path;
    auto* compare_cmd = sim_cmd->add_subcommand("compare", "Run both models and compare");
    compare_cmd->add_option("scenario", compare_path, "Scenario file")->required();

    std::string check_path;
    auto* check_cmd = app.add_subcommand("check", "Build-check a MiniJ file");
    check_cmd->add_option("file", check_path, "MiniJ file")->required();

    std::string deps_path, deps_element;
    auto* deps_cmd = app.add_subcommand("deps", "List the elements dependent on one element");
    deps_cmd->add_option("file", deps_path, "MiniJ file")->required();
    deps_cmd->add_option("--element", deps_element, "Qualified element name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "ssd: " << e.what() << "\n\n" << app.help();
        return usage;
    }

    if (*serve_cmd) return cmd_serve(serve);
    if (*client_cmd) return cmd_client(client);
    if (*run_cmd) return cmd_sim_run(run);
    if (*compare_cmd) return cmd_sim_compare(compare_path);
    if (*check_cmd) return cmd_check(check_path);
    if (*deps_cmd) return cmd_deps(deps_path, deps_element);
    return usage;
}
