#pragma once

#include "nq/rational.hpp"
#include "nq/ring.hpp"

#include <span>
#include <string_view>
#include <variant>

namespace nq
{
    struct Unique
    {
        RationalVector xi;
    };

    /// Solution set of a singular system.
    ///
    /// Free sites are pinned to 0 in `base`. The general solution adds the
    /// kernel: c·(1,-1,1,-1,...) for the asymmetric ring, and the period-3
    /// pattern (a, b, -a-b, ...) for the symmetric ring.
    struct Family
    {
        RationalVector base;
        int free_parameters = 0;
        Neighborhood kind = Neighborhood::Asymmetric;
    };

    enum class SolvabilityCondition : std::uint8_t
    {
        AlternatingSums, // odd-site sum == even-site sum
        ResidueClassSums, // the three mod-3 class sums coincide
    };

    std::string_view to_string(SolvabilityCondition c) noexcept;

    struct Infeasible
    {
        SolvabilityCondition violated;
    };

    using SolveOutcome = std::variant<Unique, Family, Infeasible>;

    // u_i = xi_i + xi_{i+1}; needs at least 3 sites.
    SolveOutcome solve_occupancy_asym(std::span<const Rational> u);
    // u_i = xi_{i-1} + xi_i + xi_{i+1}; needs at least 4 sites.
    SolveOutcome solve_occupancy_sym(std::span<const Rational> u);
    SolveOutcome solve_occupancy(std::span<const Rational> u, Neighborhood kind);
    SolveOutcome solve_occupancy(const Potential& u, Neighborhood kind);

    // Window sums over rational occupancies.
    RationalVector apply_windows(std::span<const Rational> xi, Neighborhood kind);

    // base + kernel(params); params.size() must equal free_parameters.
    RationalVector family_member(const Family& family, std::span<const Rational> params);

    // Odd-site and even-site sums of v agree. Only defined for even M.
    bool parity_invariant(std::span<const Count> v);
    inline bool parity_invariant(const ReducedPotential& v) { return parity_invariant(v.excess()); }

    // The three residue-class sums agree. Only defined for M divisible by 3.
    bool mod3_invariant(std::span<const Count> u);
} // namespace nq
