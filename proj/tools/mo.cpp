// mo: run a server, replay simulated scenarios, drive the file DAO, inspect
// store files.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mo/dao/file.hpp"
#include "mo/net/tcp.hpp"
#include "mo/scenario/runner.hpp"
#include "mo/server/server.hpp"

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kUsage = 2, kBind = 3 };

struct ServeArgs {
    std::string config_path;
    std::string listen = "127.0.0.1:7000";
    std::string local_listen = "127.0.0.1:7001";
    std::string secret_hex;
    std::string store_path;
    std::size_t cache_capacity = 1024;
    std::uint64_t grace_ms = 30'000;
    std::uint64_t skew_ms = 10'000;
    std::size_t busy_threshold = 4;
    std::size_t ditto_max = 8;
    std::size_t flood_fanout = 0;
    std::uint64_t flood_interval_ms = 1000;
    std::size_t threads = 2;
    std::string log_level = "info";
};

struct ScenarioArgs {
    std::string script;
    std::optional<std::uint64_t> seed;
    std::string trace_path;
    bool quiet = false;
};

struct FsArgs {
    std::string server = "127.0.0.1:7001";
    std::string home = "127.0.0.1:7000";
    std::string secret_hex;
    std::string name = "file";
    std::string root_hex;
    std::size_t index = 0;
    std::optional<std::string> text;
    unsigned level = 0;
};

mo::net::LocalSecret parse_secret(const std::string& hex) {
    mo::net::LocalSecret s{};
    if (hex.empty()) return s;
    auto bytes = mo::from_hex(hex);
    if (bytes.size() != s.size()) throw mo::Error(mo::Errc::bad_config, "secret must be 32 bytes of hex");
    std::copy(bytes.begin(), bytes.end(), s.begin());
    return s;
}

// Values from a key=value file fill every option not given on the command line.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path);
    } catch (const CLI::Error& e) {
        throw mo::Error(mo::Errc::bad_config, path + ": " + e.what());
    }
    for (const auto& item : items) {
        auto name = item.name;
        std::replace(name.begin(), name.end(), '_', '-');
        auto* opt = cmd.get_option_no_throw("--" + name);
        if (!opt || name == "config") throw mo::Error(mo::Errc::bad_config, path + ": unknown key '" + item.name + "'");
        if (opt->count() > 0) continue;
        for (const auto& v : item.inputs) opt->add_result(v);
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw mo::Error(mo::Errc::bad_config, path + ": " + item.name + ": " + e.what());
        }
    }
}

int run_serve(CLI::App& cmd, ServeArgs& a) {
    if (!a.config_path.empty()) apply_config_file(cmd, a.config_path);
    spdlog::set_level(spdlog::level::from_str(a.log_level));

    mo::ServerConfig config;
    config.listen = mo::HomeLocation::parse(a.listen);
    config.local_listen = mo::HomeLocation::parse(a.local_listen);
    config.secret = parse_secret(a.secret_hex);
    config.cache_capacity = a.cache_capacity;
    config.grace_period_ms = a.grace_ms;
    config.clock_skew_bound_ms = a.skew_ms;
    config.busy_threshold = a.busy_threshold;
    config.ditto_max = a.ditto_max;
    config.flood_fanout = a.flood_fanout;
    config.flood_interval_ms = a.flood_interval_ms;
    config.store_path = a.store_path;
    config.validate();
    if (a.secret_hex.empty()) spdlog::warn("no --secret given; the local channel uses an all-zero secret");

    // Block the shutdown signals before any thread exists so that only
    // sigwait below sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    mo::net::TcpRuntime runtime(a.threads);
    mo::Server server(config, runtime);
    if (!config.store_path.empty()) {
        auto records = mo::store_load(config.store_path);
        server.import_store(records);
        spdlog::info("loaded {} store entries from {}", records.size(), config.store_path);
    }
    std::optional<mo::net::TcpListener> listener;
    try {
        listener.emplace(runtime, server, config.listen, config.local_listen);
    } catch (const mo::Error& e) {
        spdlog::error("{}", e.what());
        return kBind;
    }
    server.start();
    spdlog::info("serving remote {} local {}", config.listen.to_string(), config.local_listen->to_string());

    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}: shutting down", sig);
    server.stop();
    listener->close();
    runtime.stop();
    if (!config.store_path.empty()) {
        auto records = server.export_store();
        mo::store_save(config.store_path, records);
        spdlog::info("saved {} store entries to {}", records.size(), config.store_path);
    }
    return kOk;
}

int run_scenario(const ScenarioArgs& a) {
    std::string text;
    if (auto builtin = mo::scenario::builtin_script(a.script)) {
        text = *builtin;
    } else {
        std::ifstream f(a.script);
        if (!f) throw mo::Error(mo::Errc::script_malformed, "no built-in scenario or readable file '" + a.script + "'");
        text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    auto script = mo::scenario::parse_script(text);
    const auto seed = a.seed.value_or(script.seed.value_or(1));
    auto result = mo::scenario::run_script(script, seed);
    if (!a.quiet)
        for (const auto& line : result.report) std::cout << line << '\n';
    if (!a.trace_path.empty()) {
        std::ofstream out(a.trace_path, std::ios::trunc);
        out << result.trace;
        if (!out) throw mo::Error(mo::Errc::bad_config, "cannot write " + a.trace_path);
    }
    std::cout << (result.passed ? "PASS" : "FAIL") << " scenario " << a.script << " seed " << seed << '\n';
    return result.passed ? kOk : kFailed;
}

mo::Token parse_token(const std::string& hex) { return mo::token_decode(mo::from_hex(hex)); }

int run_fs(const std::string& op, const FsArgs& a) {
    mo::net::TcpLocalLink link(mo::HomeLocation::parse(a.server));
    mo::Session session(link, mo::SessionOptions{mo::HomeLocation::parse(a.home), parse_secret(a.secret_hex)});
    if (op == "create") {
        auto file = mo::FileDao::create(session, a.name);
        std::cout << mo::to_hex(mo::token_encode(file.root())) << '\n';
        return kOk;
    }
    auto file = mo::FileDao::open(session, parse_token(a.root_hex));
    if (op == "read") {
        auto content = file.read();
        std::cout.write(reinterpret_cast<const char*>(content.data()), static_cast<std::streamsize>(content.size()));
        std::cout.flush();
    } else if (op == "write") {
        std::string data;
        if (a.text)
            data = *a.text;
        else
            data.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
        auto token = file.write_block(a.index, mo::as_bytes(data));
        std::cout << mo::to_hex(mo::token_encode(token)) << '\n';
    } else if (op == "replicate") {
        session.put_repl(file.root(), mo::ReplicationPolicy::flooding(static_cast<std::uint8_t>(a.level)));
    }
    return kOk;
}

int run_store_dump(const std::string& path) {
    std::cout << mo::store_dump(mo::store_load(path));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"micro-object server and tools"};
    app.require_subcommand(1);

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "run an MO server over TCP");
    serve->add_option("--config", serve_args.config_path, "key=value configuration file")->envname("MO_CONFIG");
    serve->add_option("--listen", serve_args.listen, "remote channel address (the home identity)");
    serve->add_option("--local-listen", serve_args.local_listen, "trusted local channel address");
    serve->add_option("--secret", serve_args.secret_hex, "local channel secret, 64 hex digits");
    serve->add_option("--store", serve_args.store_path, "store file, loaded at start and written at shutdown");
    serve->add_option("--cache-capacity", serve_args.cache_capacity)->check(CLI::PositiveNumber);
    serve->add_option("--grace-ms", serve_args.grace_ms);
    serve->add_option("--skew-ms", serve_args.skew_ms);
    serve->add_option("--busy-threshold", serve_args.busy_threshold);
    serve->add_option("--ditto-max", serve_args.ditto_max);
    serve->add_option("--flood-fanout", serve_args.flood_fanout, "0 = unlimited");
    serve->add_option("--flood-interval-ms", serve_args.flood_interval_ms, "0 disables the periodic flood");
    serve->add_option("--threads", serve_args.threads)->check(CLI::PositiveNumber);
    serve->add_option("--log-level", serve_args.log_level);

    ScenarioArgs scenario_args;
    auto* scenario = app.add_subcommand("scenario", "replay a scenario on the simulated network");
    scenario->add_option("script", scenario_args.script, "built-in name (abc, abc-auto) or script path")->required();
    scenario->add_option("--seed", scenario_args.seed);
    scenario->add_option("--trace", scenario_args.trace_path, "write the delivery trace here");
    scenario->add_flag("--quiet", scenario_args.quiet, "print only the verdict");

    FsArgs fs_args;
    auto* fs = app.add_subcommand("fs", "file DAO operations against a running server");
    fs->require_subcommand(1);
    fs->add_option("--server", fs_args.server, "local channel of the server")->envname("MO_SERVER");
    fs->add_option("--home", fs_args.home, "remote address of the same server")->envname("MO_HOME");
    fs->add_option("--secret", fs_args.secret_hex)->envname("MO_SECRET");
    auto* fs_create = fs->add_subcommand("create", "create an empty file, print its token");
    fs_create->add_option("name", fs_args.name);
    auto* fs_read = fs->add_subcommand("read", "print the file content");
    fs_read->add_option("root", fs_args.root_hex)->required();
    auto* fs_write = fs->add_subcommand("write", "replace or append a block");
    fs_write->add_option("root", fs_args.root_hex)->required();
    fs_write->add_option("index", fs_args.index)->required();
    fs_write->add_option("--text", fs_args.text, "content (default: stdin)");
    auto* fs_repl = fs->add_subcommand("replicate", "flood the file at a replication level");
    fs_repl->add_option("root", fs_args.root_hex)->required();
    fs_repl->add_option("--level", fs_args.level);

    std::string dump_path;
    auto* dump = app.add_subcommand("store-dump", "print a store file");
    dump->add_option("path", dump_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("mo"));
    try {
        if (serve->parsed()) return run_serve(*serve, serve_args);
        if (scenario->parsed()) {
            spdlog::set_level(spdlog::level::warn);
            return run_scenario(scenario_args);
        }
        if (fs->parsed()) {
            for (auto* sub : fs->get_subcommands())
                if (sub->parsed()) return run_fs(sub->get_name(), fs_args);
        }
        if (dump->parsed()) return run_store_dump(dump_path);
    } catch (const mo::Error& e) {
        std::cerr << "mo: " << mo::errc_name(e.code()) << ": " << e.what() << '\n';
        switch (e.code()) {
        case mo::Errc::bad_config:
        case mo::Errc::script_malformed:
        case mo::Errc::invalid_home:
            return kUsage;
        case mo::Errc::bind_failure:
            return kBind;
        default:
            return kFailed;
        }
    }
    return kUsage;
}
