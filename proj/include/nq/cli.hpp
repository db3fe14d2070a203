#pragma once

#include "nq/ring.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nq
{
    enum ExitCode : int
    {
        kExitOk = 0,
        kExitUsage = 1,
        kExitViolation = 2,
        kExitIo = 3,
    };

    /// Everything a subcommand needs, after merging defaults, the optional
    /// JSON config file, and command-line flags (in that order of precedence).
    struct ExperimentConfig
    {
        int m = 5;
        Neighborhood neighborhood = Neighborhood::Symmetric;
        std::string rule = "min";
        std::optional<double> beta;
        Count steps = 100000;
        int replicas = 50;
        std::uint64_t seed = 0;
        std::optional<std::vector<Count>> init; // empty start when absent
        Count sample_every = 1000;
        std::string out;    // trajectory path, none when empty
        std::string report; // stdout when empty
        std::string suite;
        int jobs = 1;
    };

    nlohmann::ordered_json to_json(const ExperimentConfig& config);

    // Applies the keys present in `file` on top of `config`; unknown keys are rejected.
    void apply_config_file(ExperimentConfig& config, const nlohmann::ordered_json& file);

    // "empty" or comma-separated non-negative counts.
    std::optional<std::vector<Count>> parse_init(const std::string& text);

    /// Entry point shared by the executable and the tests. `args` excludes
    /// the program name. Returns one of the ExitCode values.
    int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
} // namespace nq
