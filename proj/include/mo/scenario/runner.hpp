#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mo/scenario/script.hpp"

namespace mo::scenario {

struct RunResult {
    bool passed = true;
    std::vector<std::string> report;   // one line per expectation and checkpoint
    std::vector<std::string> failures; // subset of report
    std::vector<std::string> checkpoints; // labels in the order reached
    std::string trace;
};

// Runs a parsed script on a fresh simulated network. Throws
// Error(script_malformed) for actions that cannot be carried out.
RunResult run_script(const Script& script, std::uint64_t seed);

} // namespace mo::scenario
