#include "mo/scenario/runner.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "mo/scenario/testbed.hpp"

namespace mo::scenario {

namespace {

constexpr std::uint64_t kDefaultLifetimeMs = 24ull * 3600 * 1000;

[[noreturn]] void malformed(int line, const std::string& what) {
    throw Error(Errc::script_malformed, "line " + std::to_string(line) + ": " + what);
}

std::uint64_t number(const std::string& text, int line) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) malformed(line, "bad number '" + text + "'");
    return v;
}

bool flag(const std::string& text, int line) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    malformed(line, "bad boolean '" + text + "'");
}

ServerConfig config_from(const ServerDecl& decl) {
    ServerConfig c;
    for (const auto& [key, value] : decl.options) {
        auto n = [&] { return number(value, decl.line); };
        if (key == "cache_capacity") c.cache_capacity = n();
        else if (key == "grace_ms") c.grace_period_ms = n();
        else if (key == "skew_ms") c.clock_skew_bound_ms = n();
        else if (key == "busy_threshold") c.busy_threshold = n();
        else if (key == "ditto_max") c.ditto_max = n();
        else if (key == "flood_fanout") c.flood_fanout = n();
        else if (key == "flood_on_change") c.flood_on_change = flag(value, decl.line);
        else if (key == "flood_interval_ms") c.flood_interval_ms = n();
        else if (key == "sample_max") c.sample_max = n();
        else if (key == "fetch_service_ms") c.fetch_service_ms = n();
        else if (key == "home_attempts") c.home_attempts = static_cast<unsigned>(n());
        else if (key == "retry_base_ms") c.retry_base_ms = n();
        else if (key == "busy_rounds") c.busy_rounds = static_cast<unsigned>(n());
        else if (key == "gc_interval_ms") c.gc_interval_ms = n();
        else malformed(decl.line, "unknown server option '" + key + "'");
    }
    return c;
}

// Value of a `key=value` argument, where the value may start with '+'.
std::optional<std::string> option(const std::vector<std::string>& args, std::size_t from, const std::string& key) {
    for (std::size_t i = from; i < args.size(); ++i)
        if (args[i].rfind(key + "=", 0) == 0) return args[i].substr(key.size() + 1);
    return std::nullopt;
}

std::string join(const std::vector<std::string>& words, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < words.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

class Runner {
public:
    Runner(const Script& script, std::uint64_t seed) : script_(script), bed_(net::SimConfig{.seed = seed}) {
        for (const auto& decl : script.servers) bed_.add_server(decl.name, config_from(decl));
    }

    RunResult run() {
        auto& sim = bed_.sim();
        for (const auto& a : script_.actions) {
            sim.run_until(sim.config().epoch_ms + a.at_ms);
            try {
                execute(a);
            } catch (const Error& e) {
                if (e.code() == Errc::script_malformed) throw;
                fail(a, std::string(a.verb) + " failed: " + e.what());
            }
        }
        result_.trace = sim.trace_text();
        return std::move(result_);
    }

private:
    void execute(const Action& a) {
        if (a.verb == "checkpoint") return checkpoint(a);
        if (a.actor == "net") return network(a);
        if (a.verb == "expect") return expect(a);
        auto& session = bed_.session(a.actor);
        auto& server = bed_.server(a.actor);
        const auto now = bed_.sim().now_ms();
        if (a.verb == "create") {
            const auto& name = a.args[0];
            if (objects_.contains(name)) malformed(a.line, "object '" + name + "' already exists");
            std::size_t text_from = 1;
            std::uint64_t lifetime = kDefaultLifetimeMs;
            AuxTag aux = 0;
            while (text_from < a.args.size() && a.args[text_from].find('=') != std::string::npos) {
                const auto& arg = a.args[text_from];
                if (arg.rfind("expire=+", 0) == 0) lifetime = number(arg.substr(8), a.line);
                else if (arg.rfind("aux=", 0) == 0) aux = static_cast<AuxTag>(number(arg.substr(4), a.line));
                else break;
                ++text_from;
            }
            auto text = join(a.args, text_from);
            auto t = session.create_new(ExpireDate{now + lifetime}, as_bytes(text), SecurityPolicy::none(),
                                        SecurityPolicy::none(), aux);
            objects_[name] = t;
        } else if (a.verb == "copy") {
            session.create_copy(object(a, a.args[0]), SecurityPolicy::none(), SecurityPolicy::none());
        } else if (a.verb == "fetch") {
            session.get_payload(object(a, a.args[0]));
        } else if (a.verb == "add") {
            std::vector<Token> children;
            for (std::size_t i = 1; i < a.args.size(); ++i) children.push_back(object(a, a.args[i]));
            session.add_tokens(object(a, a.args[0]), children);
        } else if (a.verb == "replicate") {
            auto t = object(a, a.args[0]);
            const auto& kind = a.args[1];
            if (kind == "flooding") {
                auto level = option(a.args, 2, "level");
                session.put_repl(t, ReplicationPolicy::flooding(
                                        static_cast<std::uint8_t>(level ? number(*level, a.line) : 0)));
            } else if (kind == "sustain") {
                auto until = option(a.args, 2, "until");
                if (!until || until->empty() || (*until)[0] != '+') malformed(a.line, "sustain needs until=+MS");
                session.put_repl(t, ReplicationPolicy::sustain(ExpireDate{now + number(until->substr(1), a.line)}));
            } else {
                const auto& which = a.args[2];
                if (which != "flooding" && which != "sustain") malformed(a.line, "unknown policy '" + which + "'");
                session.stop_repl(t, which == "flooding" ? PolicyKind::flooding : PolicyKind::sustain);
            }
        } else if (a.verb == "flood") {
            server.flood_step(object(a, a.args[0]));
        } else if (a.verb == "poll") {
            session.poll_all();
        } else if (a.verb == "gc") {
            server.gc_sweep();
        }
    }

    void network(const Action& a) {
        auto& sim = bed_.sim();
        if (a.verb == "drop") {
            double p = 0;
            try {
                p = std::stod(a.args[2]);
            } catch (const std::exception&) {
                malformed(a.line, "bad probability '" + a.args[2] + "'");
            }
            sim.set_drop(bed_.address(a.args[0]), bed_.address(a.args[1]), p);
        } else if (a.verb == "partition") {
            std::vector<std::set<Address>> groups;
            for (const auto& g : a.args) {
                std::set<Address> group;
                std::istringstream in(g);
                for (std::string name; std::getline(in, name, ',');) {
                    if (!bed_.has_server(name)) malformed(a.line, "unknown server '" + name + "'");
                    group.insert(bed_.address(name));
                }
                groups.push_back(std::move(group));
            }
            sim.partition(groups);
        } else if (a.verb == "heal") {
            sim.heal();
        } else {
            sim.set_online(bed_.address(a.args[0]), a.verb == "online");
        }
    }

    void expect(const Action& a) {
        const auto& what = a.args[0];
        const auto t = object(a, a.args[1]);
        std::vector<std::string> want(a.args.begin() + 3, a.args.end());
        auto& server = bed_.server(a.actor);
        std::string got;
        bool ok = false;
        if (what == "payload") {
            auto text = join(a.args, 3);
            try {
                auto bytes = bed_.session(a.actor).get_payload(t);
                got = to_string(bytes);
            } catch (const Error& e) {
                got = std::string("<") + std::string(errc_name(e.code())) + ">";
            }
            ok = got == text;
        } else {
            std::vector<std::string> have;
            if (what == "cluster") {
                auto part = server.find(t);
                if (!part) {
                    got = "<no copy>";
                } else {
                    for (const auto& m : part->cluster) have.push_back(name_of(m));
                }
            } else {
                for (const auto& p : server.peers(t)) have.push_back(bed_.actor_of(p));
            }
            std::sort(have.begin(), have.end());
            std::sort(want.begin(), want.end());
            if (got.empty()) {
                got = "{" + join(have, 0) + "}";
                ok = have == want;
            }
        }
        std::ostringstream line;
        line << (ok ? "ok   " : "FAIL ") << "@" << bed_.sim().elapsed_ms() << " " << a.actor << " " << what << " "
             << a.args[1] << " = " << (what == "payload" ? join(a.args, 3) : "{" + join(want, 0) + "}");
        if (!ok) line << " (got " << got << ")";
        result_.report.push_back(line.str());
        if (!ok) {
            result_.passed = false;
            result_.failures.push_back(line.str());
        }
    }

    void checkpoint(const Action& a) {
        const auto& label = a.args[0];
        result_.checkpoints.push_back(label);
        result_.report.push_back("checkpoint " + label + " @" + std::to_string(bed_.sim().elapsed_ms()));
        for (const auto& actor : bed_.names()) {
            auto& server = bed_.server(actor);
            for (const auto& [name, token] : objects_) {
                auto part = server.find(token);
                if (!part) continue;
                std::vector<std::string> members;
                for (const auto& m : part->cluster) members.push_back(name_of(m));
                std::vector<std::string> peers;
                for (const auto& p : server.peers(token)) peers.push_back(bed_.actor_of(p));
                std::ostringstream note;
                note << label << " " << name << " cluster={" << join(members, 0) << "} peers={" << join(peers, 0)
                     << "}";
                bed_.sim().note(actor, note.str());
            }
        }
    }

    Token object(const Action& a, const std::string& name) const {
        auto it = objects_.find(name);
        if (it == objects_.end()) malformed(a.line, "unknown object '" + name + "'");
        return it->second;
    }

    std::string name_of(const Token& t) const {
        for (const auto& [name, token] : objects_)
            if (token == t) return name;
        return token_prefix(t);
    }

    void fail(const Action& a, const std::string& what) {
        std::string line = "FAIL @" + std::to_string(bed_.sim().elapsed_ms()) + " line " + std::to_string(a.line) +
                           " " + a.actor + ": " + what;
        result_.report.push_back(line);
        result_.failures.push_back(line);
        result_.passed = false;
    }

    const Script& script_;
    Testbed bed_;
    std::map<std::string, Token> objects_;
    RunResult result_;
};

} // namespace

RunResult run_script(const Script& script, std::uint64_t seed) { return Runner(script, seed).run(); }

} // namespace mo::scenario
