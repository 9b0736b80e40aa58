#pragma once

// Batch pipeline behind the command line: fit-surface, calibrate, simulate,
// hedge, backtest, report. Artifacts live under <out>/<segment>/.

#include "cchedge/errors.hpp"
#include "cchedge/io.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace cchedge {

/// An upstream artifact is missing; the message names the command that makes it.
class DependencyError : public ConfigError {
public:
    DependencyError(const std::string& what, std::string required)
        : ConfigError(what + " (run --command " + required + " first)"), required_(std::move(required)) {}
    const std::string& required_command() const { return required_; }

private:
    std::string required_;
};

struct CliOptions {
    fs::path config;
    std::string command;
    fs::path out;
    std::optional<std::uint64_t> seed;   // overrides the config seed
    std::optional<std::string> segment;
    std::optional<std::string> model;
    std::optional<std::string> strategy;
};

/// Runs one command, throwing on failure.
void execute_command(const CliOptions& opts, std::ostream& log);

/// Same, mapped to an exit status: 0 ok, 1 validation (config, data, missing
/// upstream artifact), 2 numeric failure. Errors are written to `err`.
int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace cchedge
