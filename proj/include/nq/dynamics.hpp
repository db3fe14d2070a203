#pragma once

#include "nq/ring.hpp"
#include "nq/rng.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nq
{
    class AllocationRule
    {
    public:
        enum class Kind : std::uint8_t
        {
            Min,
            Softmax,
            Max,
        };

        static AllocationRule min_rule() noexcept { return AllocationRule(Kind::Min, 0.0); }
        static AllocationRule max_rule() noexcept { return AllocationRule(Kind::Max, 0.0); }
        // beta must be finite and > 0.
        static AllocationRule softmax(double beta);

        Kind kind() const noexcept { return kind_; }
        double beta() const noexcept { return beta_; }
        std::string describe() const;

    private:
        AllocationRule(Kind kind, double beta) noexcept : kind_(kind), beta_(beta) {}

        Kind kind_;
        double beta_;
    };

    // "min", "max" or "softmax" (which needs beta).
    AllocationRule parse_rule(std::string_view name, std::optional<double> beta);

    /// Occupancy plus a cached potential vector, advanced one particle at a time.
    class ChainState
    {
    public:
        ChainState(Ring ring, const Occupancy& initial);
        static ChainState empty(Ring ring) { return ChainState(ring, Occupancy::empty(ring.size())); }

        const Ring& ring() const noexcept { return ring_; }
        int size() const noexcept { return ring_.size(); }
        Count t() const noexcept { return t_; }
        Count total() const noexcept { return total_; }
        std::span<const Count> xi() const noexcept { return xi_; }
        std::span<const Count> u() const noexcept { return u_; }

        Occupancy occupancy() const { return Occupancy(xi_); }
        Potential potential() const { return Potential(u_); }

        Count min_u() const noexcept;
        Count max_u() const noexcept;

        // One particle at site; u is updated on the affected windows only.
        void allocate(int site);

        // u == potentials(xi), recomputed from scratch.
        bool consistent() const;

    private:
        Ring ring_;
        Count t_ = 0;
        Count total_ = 0;
        std::vector<Count> xi_;
        std::vector<Count> u_;
    };

    /// Probability of each site receiving the next particle.
    ///
    /// Min and Max rules are uniform over argmin/argmax. Softmax weights are
    /// beta^(u_i - ref) with ref = min u for beta < 1 and ref = max u for
    /// beta > 1, so every exponent is non-positive; beta == 1 is exactly uniform.
    std::vector<double> transition_distribution(const ChainState& state, const AllocationRule& rule);

    // Inverse CDF with a single uniform draw.
    int sample_site(const ChainState& state, const AllocationRule& rule, RandomStream& rng);

    // Allocates one particle and returns the chosen site.
    int step(ChainState& state, const AllocationRule& rule, RandomStream& rng);

    struct TrajectoryRecord
    {
        Count t = 0;
        std::vector<Count> xi;
        std::vector<Count> u;
        std::vector<Count> v;
        Count m = 0;
        std::optional<int> site; // 0-based; empty for the initial record

        static TrajectoryRecord capture(const ChainState& state, std::optional<int> site);
    };

    // {"t":..,"xi":[..],"u":[..],"v":[..],"m":..,"site":..} with 1-based site.
    std::string to_json_line(const TrajectoryRecord& record);

    class JsonLinesSink
    {
    public:
        explicit JsonLinesSink(std::ostream& out) : out_(out) {}
        void write(const TrajectoryRecord& record);

    private:
        std::ostream& out_;
    };

    struct StepEvent
    {
        const ChainState& state; // after the allocation
        int site;
        Count min_before;
        Count max_before;
        Count site_potential_before;
        Count min_after;
    };

    class Observer
    {
    public:
        virtual ~Observer() = default;
        virtual void begin(const ChainState& /*initial*/, Count /*horizon*/) {}
        virtual void on_step(const StepEvent& event) = 0;
        virtual void finish(const ChainState& /*final_state*/) {}
    };

    struct RunOptions
    {
        Count steps = 0;
        // 0 disables periodic sampling; the final state is always emitted when steps > 0.
        Count sample_every = 0;
        bool record_initial = false;
        bool record_levels = false;
        // Recompute potentials every step and check the Min/Max rule support.
        bool check_consistency = false;
    };

    using TrajectorySink = std::function<void(const TrajectoryRecord&)>;

    struct RunResult
    {
        ChainState final_state;
        std::vector<TrajectoryRecord> trajectory; // empty when a sink was supplied
    };

    RunResult run(ChainState initial, const AllocationRule& rule, RandomStream& rng, std::span<Observer* const> observers,
                  const RunOptions& options, const TrajectorySink& sink = {});
} // namespace nq
