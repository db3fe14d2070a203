#pragma once

#include "nq/rational.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nq
{
    // Ordered zero < half < full; the order defines canonical rotations.
    enum class LimitSymbol : std::uint8_t
    {
        Zero = 0,
        Half = 1,
        Full = 2,
    };

    /// A limiting fraction vector x with entries in {0, alpha/2, alpha}.
    struct LimitConfiguration
    {
        std::vector<LimitSymbol> symbols;
        RationalVector x;
        Rational alpha;
        // Every zero entry has both cyclic neighbours positive.
        bool achievable_from_empty = false;

        friend bool operator==(const LimitConfiguration&, const LimitConfiguration&) = default;
    };

    // alpha = 1 / (#full + #half/2); symbols must contain a positive entry.
    LimitConfiguration make_configuration(std::vector<LimitSymbol> symbols);

    /// All limiting configurations on a symmetric ring of `sites` >= 4 sites,
    /// as sequences (rotations are distinct), in lexicographic symbol order.
    ///
    /// Backtracks over symbol strings with local pruning and accepts a string
    /// when zeros have a positive neighbour, fulls sit between zeros, halves
    /// come in adjacent pairs framed as (full, zero, half, half, zero, full),
    /// and, when 3 divides the ring size, every residue class holds a zero.
    std::vector<LimitConfiguration> enumerate_limits(int sites);

    bool tag_achievability(std::span<const Rational> x);

    // Checks the defining rules directly on values (not on symbols), for
    // re-validating generator output.
    bool satisfies_limit_rules(std::span<const Rational> x);

    std::vector<LimitSymbol> canonical_rotation(std::span<const LimitSymbol> symbols);

    struct RotationClass
    {
        LimitConfiguration representative; // lexicographically minimal rotation
        int orbit_size = 0;                 // distinct rotations; divides the ring size
        int members = 0;                    // configurations of the input in this class
    };

    // Classes ordered by representative.
    std::vector<RotationClass> rotation_classes(std::span<const LimitConfiguration> configs);

    struct LimitCounts
    {
        int distinct_unstarred = 0;
        int distinct_total = 0;
        int all_unstarred = 0;
        int all_total = 0;

        friend bool operator==(const LimitCounts&, const LimitCounts&) = default;
    };

    LimitCounts count_limits(std::span<const LimitConfiguration> configs);

    std::string format_symbols(std::span<const LimitSymbol> symbols); // e.g. "HH0F0"

    // Output formats for listings. `configs` is what gets printed; classes
    // switch the listing to one row per rotation class with its orbit size.
    std::string limits_to_json(std::span<const LimitConfiguration> configs);
    std::string classes_to_json(std::span<const RotationClass> classes);
    std::string limits_to_csv(std::span<const LimitConfiguration> configs);
    std::string classes_to_csv(std::span<const RotationClass> classes);
    // One aligned row: M | representatives (starred if not achievable) | counts.
    std::string limits_table(int sites, std::span<const LimitConfiguration> configs);
} // namespace nq
