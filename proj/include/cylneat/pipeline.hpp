#pragma once

#include "cylneat/json_io.hpp"

#include <map>
#include <string>

namespace cylneat {

struct PipelineConfig {
    unsigned n = 2;
    unsigned k = 1;
    std::size_t m0 = 2;
    unsigned rcount = 3;
    unsigned depth = 1;
    std::uint64_t seed = 0;
    unsigned q = 2;
    unsigned L = 1;
    std::size_t max_base = 5;
    std::size_t carrier_cap = kDefaultCarrierCap;
    std::size_t v_cap = kDefaultVCap;
    std::size_t build_budget = 50'000'000;
    std::size_t game_budget = 2'000'000'000;
    std::size_t neat_budget = 2'000'000;
    bool timing = false;

    Json to_json() const;
    void validate() const;  // UsageError on out-of-range values
};

// Exit classes: 0 pass, 1 verified negative, 2 resource or inconclusive, 3 usage.
struct CommandResult {
    int exit_code = 0;
    std::map<std::string, Json> files;  // file name -> content (version and config embedded)
    std::string diagnostic;
};

CommandResult cmd_build(const PipelineConfig& c);
CommandResult cmd_check(const PipelineConfig& c, const ColorFamily& cf);
CommandResult cmd_interpret(const PipelineConfig& c, const ColorFamily& cf);
CommandResult cmd_elementarity(const PipelineConfig& c, const ColorFamily& cf);
// target "A" searches the built algebra, "B" the interpreted one.
CommandResult cmd_neatcheck(const PipelineConfig& c, const ColorFamily& cf, const std::string& target);
CommandResult cmd_pipeline(const PipelineConfig& c);

void write_outputs(const CommandResult& r, const std::string& dir);

} // namespace cylneat
