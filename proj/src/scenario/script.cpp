#include "mo/scenario/script.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include "mo/core/error.hpp"

namespace mo::scenario {

namespace {

[[noreturn]] void malformed(int line, const std::string& what) {
    throw Error(Errc::script_malformed, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::uint64_t parse_u64(const std::string& text, int line) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) malformed(line, "expected a number, got '" + text + "'");
    return v;
}

const std::set<std::string> kServerVerbs = {"create", "copy", "fetch", "add", "replicate", "flood", "poll", "gc"};
const std::set<std::string> kNetVerbs = {"drop", "partition", "heal", "offline", "online"};

void check_action(const Action& a, const std::set<std::string>& servers) {
    auto need = [&](std::size_t n, const char* usage) {
        if (a.args.size() < n) malformed(a.line, std::string("usage: ") + usage);
    };
    auto known = [&](const std::string& name) {
        if (!servers.contains(name)) malformed(a.line, "unknown server '" + name + "'");
    };
    if (a.verb == "checkpoint") {
        need(1, "checkpoint <label>");
        return;
    }
    if (a.actor == "net") {
        if (!kNetVerbs.contains(a.verb)) malformed(a.line, "unknown net action '" + a.verb + "'");
        if (a.verb == "drop") {
            need(3, "net drop <a> <b> <probability>");
            known(a.args[0]);
            known(a.args[1]);
        } else if (a.verb == "offline" || a.verb == "online") {
            need(1, "net offline|online <server>");
            known(a.args[0]);
        } else if (a.verb == "partition") {
            need(1, "net partition <a,b,...> [<c,...>...]");
        }
        return;
    }
    known(a.actor);
    if (a.verb == "expect") {
        need(3, "expect <actor> cluster|peers|payload <object> = ...");
        const auto& what = a.args[0];
        if (what != "cluster" && what != "peers" && what != "payload")
            malformed(a.line, "unknown expectation '" + what + "'");
        if (a.args[2] != "=") malformed(a.line, "expected '=' after the object name");
        return;
    }
    if (!kServerVerbs.contains(a.verb)) malformed(a.line, "unknown action '" + a.verb + "'");
    if (a.verb == "add") need(2, "add <parent> <child...>");
    else if (a.verb == "replicate") {
        need(2, "replicate <object> flooding [level=N] | sustain until=+MS | stop <kind>");
        const auto& kind = a.args[1];
        if (kind != "flooding" && kind != "sustain" && kind != "stop")
            malformed(a.line, "unknown policy '" + kind + "'");
        if (kind == "stop") need(3, "replicate <object> stop flooding|sustain");
    } else if (a.verb != "poll" && a.verb != "gc")
        need(1, "<verb> <object>");
}

} // namespace

Script parse_script(std::string_view text) {
    Script script;
    std::set<std::string> servers;
    std::istringstream in{std::string(text)};
    int lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto words = split_words(line);
        if (words.empty()) continue;
        const auto& head = words[0];
        if (head == "seed") {
            if (words.size() != 2) malformed(lineno, "usage: seed <u64>");
            script.seed = parse_u64(words[1], lineno);
        } else if (head == "server") {
            if (words.size() < 2) malformed(lineno, "usage: server <name> [key=value...]");
            ServerDecl decl{words[1], {}, lineno};
            if (decl.name == "net" || decl.name == "checkpoint" || decl.name == "expect")
                malformed(lineno, "reserved server name '" + decl.name + "'");
            if (!servers.insert(decl.name).second) malformed(lineno, "duplicate server '" + decl.name + "'");
            for (std::size_t i = 2; i < words.size(); ++i) {
                auto eq = words[i].find('=');
                if (eq == std::string::npos || eq == 0) malformed(lineno, "expected key=value, got '" + words[i] + "'");
                decl.options[words[i].substr(0, eq)] = words[i].substr(eq + 1);
            }
            script.servers.push_back(std::move(decl));
        } else if (head == "at") {
            if (words.size() < 3) malformed(lineno, "usage: at <ms> <actor> <action> ...");
            Action a;
            a.line = lineno;
            a.at_ms = parse_u64(words[1], lineno);
            if (words[2] == "checkpoint") {
                a.actor = "checkpoint";
                a.verb = "checkpoint";
                a.args.assign(words.begin() + 3, words.end());
            } else if (words[2] == "expect") {
                if (words.size() < 4) malformed(lineno, "usage: expect <actor> ...");
                a.actor = words[3];
                a.verb = "expect";
                a.args.assign(words.begin() + 4, words.end());
            } else {
                if (words.size() < 4) malformed(lineno, "missing action");
                a.actor = words[2];
                a.verb = words[3];
                a.args.assign(words.begin() + 4, words.end());
            }
            script.actions.push_back(std::move(a));
        } else {
            malformed(lineno, "unknown directive '" + head + "'");
        }
    }
    for (const auto& a : script.actions) check_action(a, servers);
    std::stable_sort(script.actions.begin(), script.actions.end(),
                     [](const Action& x, const Action& y) { return x.at_ms < y.at_ms; });
    return script;
}

} // namespace mo::scenario
