#pragma once

#include "nq/ring.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nq
{
    enum class Suite : std::uint8_t
    {
        AsymOdd,
        AsymEven,
        Symmetric,
        Appendix,
        Algebra,
    };

    std::string_view to_string(Suite suite) noexcept;
    // "asym-odd", "asym-even", "sym", "appendix", "algebra"
    Suite parse_suite(std::string_view name);

    struct VerifyConfig
    {
        Suite suite = Suite::Symmetric;
        int sites = 5;
        // Only consulted by the appendix suite; the others fix the neighbourhood.
        Neighborhood kind = Neighborhood::Symmetric;
        Count steps = 100000;
        int replicas = 50;
        std::uint64_t seed = 0;
        int jobs = 1;
        double tail_fraction = 0.5;
        int stability_window = 25;
        double epsilon = 0.02;
        int algebra_samples = 1000;
        int min_renewals = 10;
        double pair_share_tolerance = 0.05;
    };

    struct VerifyReport
    {
        bool passed = true;
        nlohmann::ordered_json json;
    };

    /// Runs one assertion battery across replicas (replica r on stream r) and
    /// merges the per-replica checks in replica order. `passed` is false iff a
    /// hard check failed somewhere.
    VerifyReport run_suite(const VerifyConfig& config);
} // namespace nq
