#pragma once

#include <stdexcept>

#include "quantshape/config.hpp"

namespace quantshape::cli {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitReproduction = 4;

struct CommandOptions {
    bool     svg = false;
    unsigned threads = 1;
};

int cmd_design_fir(const RunConfig& cfg, const CommandOptions& opt);
int cmd_design_iir(const RunConfig& cfg, const CommandOptions& opt);
int cmd_tradeoff(const RunConfig& cfg, const CommandOptions& opt);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt);
int cmd_reproduce_paper(const RunConfig& cfg, const CommandOptions& opt);

}  // namespace quantshape::cli
