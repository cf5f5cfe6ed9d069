#pragma once

#include "qclt/bounds.hpp"
#include "qclt/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace qclt {

enum class Command { simulate, variance, limit, rates, positivity, clt, audit };

std::string to_string(Command command);

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunResult {
    std::vector<std::string> files;  ///< CSV paths in the order written
    std::vector<Check> checks;
    BoundModel bounds;
    nlohmann::ordered_json manifest;

    bool all_pass() const noexcept;
};

/// Bound model from the config; "fit" entries are estimated from the run's
/// own correlation and mixing data, and an unset zeta defaults to 2 for
/// stationary drivers and 1 for non-stationary ones.
BoundModel resolve_bounds(const ExperimentConfig& config, nlohmann::ordered_json* sources = nullptr);

/// Runs a subcommand and writes its CSVs plus manifest.json under config.output.
/// Output bytes depend only on the config entries, not on the worker count.
RunResult run(const ExperimentConfig& config, Command command);

/// Config used by `audit` when none is given.
ExperimentConfig default_audit_config();

}  // namespace qclt
