#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcast::cli {

enum ExitCode : int {
    ok = 0,
    invalid_config = 1,
    cannot_write = 2,
    missing_checkpoint = 3,
    runtime_failure = 4,
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string policy;
    std::optional<int> episodes;
    std::string checkpoint;
    int trials = 1;
    bool sqp_trace = false;
};

int cmd_validate(const Options &opts);
int cmd_simulate(const Options &opts);
int cmd_train(const Options &opts);
int cmd_evaluate(const Options &opts);

/// Parses argv and dispatches to a subcommand.
int run(int argc, char **argv);

}  // namespace mcast::cli
