#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mo::scenario {

// `server <name> [key=value...]`
struct ServerDecl {
    std::string name;
    std::map<std::string, std::string> options;
    int line = 0;
};

// `at <ms> <actor> <verb> <args...>`; actor is a server name, `net`,
// `expect` or `checkpoint` (the last two shift the remaining words).
struct Action {
    std::uint64_t at_ms = 0;
    std::string actor;
    std::string verb;
    std::vector<std::string> args;
    int line = 0;
};

struct Script {
    std::vector<ServerDecl> servers;
    std::vector<Action> actions; // stable-sorted by time
    std::optional<std::uint64_t> seed;
};

// Throws Error(script_malformed) naming the offending line.
Script parse_script(std::string_view text);

// Built-in scripts by name ("abc", "abc-auto"); nullopt when unknown.
std::optional<std::string> builtin_script(std::string_view name);
std::vector<std::string> builtin_names();

} // namespace mo::scenario
