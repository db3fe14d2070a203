#pragma once

#include "nq/dynamics.hpp"
#include "nq/limit_enum.hpp"
#include "nq/rational.hpp"
#include "nq/ring.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace nq
{
    enum class PatternSymbol : std::uint8_t
    {
        Zero,
        Positive,
    };

    /// Zero/positive type of a reduced potential, written "0" and "*".
    struct PatternSignature
    {
        std::vector<PatternSymbol> symbols;

        std::string str() const;
        friend bool operator==(const PatternSignature&, const PatternSignature&) = default;
    };

    PatternSignature pattern(std::span<const Count> v);

    // Sum of the entries that are at least 2.
    Count stat_S(std::span<const Count> v);
    // Zeros with both cyclic neighbours positive.
    int stat_Q(std::span<const Count> v);
    // Cyclic windows (0, +, +, 0).
    int stat_W(std::span<const Count> v);

    struct Level
    {
        Count t = 0;
        Count m = 0;
        std::vector<Count> v;
        Count S = 0;
        int Q = 0;
        int W = 0;
        PatternSignature signature;
    };

    /// Level times: t_0 is the first observation, and a new level opens at the
    /// first step where the minimum potential exceeds the current level's.
    class LevelLog
    {
    public:
        // Records must arrive with strictly increasing t.
        void on_step(const TrajectoryRecord& record);
        void observe(Count t, std::span<const Count> u);

        const std::vector<Level>& levels() const noexcept { return levels_; }
        std::size_t size() const noexcept { return levels_.size(); }
        std::optional<Count> last_t() const noexcept { return last_t_; }

    private:
        std::vector<Level> levels_;
        std::optional<Count> last_t_;
    };

    class LevelObserver : public Observer
    {
    public:
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;

        const LevelLog& log() const noexcept { return log_; }

    private:
        LevelLog log_;
        Count level_min_ = 0;
    };

    /// Outcome of one monitored property over a run.
    struct InvariantCheck
    {
        std::string id;
        bool hard = true;
        bool passed = true;
        Count violations = 0;
        std::optional<Count> first_violation; // step index
        // Violations before the evaluation window opened; informational.
        Count early_violations = 0;
        std::string detail;

        void fail(Count t);
    };

    nlohmann::ordered_json to_json(const InvariantCheck& check);

    // S(j+1) <= S(j) at every consecutive pair of levels.
    InvariantCheck check_s_monotone(const LevelLog& log);

    /// Structural battery for symmetric runs: Q non-decreasing, W
    /// non-increasing, persistence of (*,0,*) triples, and the excluded
    /// windows (three positives, three zeros, (*,*,0,0)/(0,0,*,*),
    /// (0,0,*,0,0)) over the final `tail_fraction` of levels.
    std::vector<InvariantCheck> check_symmetric_levels(const LevelLog& log, double tail_fraction = 0.5);

    /// Asymmetric step bounds, enforced once t >= tail_start * horizon:
    /// |xi_i - xi_{i+2}| <= 2, and |xi_i - t/M - (-1)^i H| <= 2M where H is the
    /// parity gap for even M and 0 for odd M.
    class AsymmetricBoundsMonitor : public Observer
    {
    public:
        explicit AsymmetricBoundsMonitor(double tail_start = 0.5) : tail_start_(tail_start) {}
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;
        std::vector<InvariantCheck> checks() const { return {neighbour_gap_, residual_}; }

    private:
        void inspect(const ChainState& state);

        double tail_start_;
        Count window_start_ = 0;
        InvariantCheck neighbour_gap_{"asym-next-nearest-gap", true, true, 0, {}, 0, "|xi_i - xi_{i+2}| <= 2"};
        InvariantCheck residual_{"asym-residual-bound", true, true, 0, {}, 0, "|xi_i - t/M - (-1)^i H| <= 2M"};
    };

    // Odd/even v sums agree at every step (asymmetric, even M).
    class ParityMonitor : public Observer
    {
    public:
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;
        const InvariantCheck& check() const noexcept { return check_; }

    private:
        void inspect(const ChainState& state);
        InvariantCheck check_{"parity-invariant", true, true, 0, {}, 0, "odd-site v sum == even-site v sum"};
        std::vector<Count> scratch_;
    };

    // Residue-class sums of u agree at every step (M divisible by 3).
    class Mod3Monitor : public Observer
    {
    public:
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;
        const InvariantCheck& check() const noexcept { return check_; }

    private:
        InvariantCheck check_{"mod3-invariant", true, true, 0, {}, 0, "u residue-class sums coincide"};
    };

    // H(t) = (sum of even-site xi - sum of odd-site xi) / M, 1-based sites.
    Rational parity_gap(std::span<const Count> xi);

    /// Times with v identically zero (all potentials equal).
    class RenewalTracker : public Observer
    {
    public:
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;

        const std::vector<Count>& renewal_times() const noexcept { return times_; }

    protected:
        virtual void on_renewal(const ChainState& state);

    private:
        void inspect(const ChainState& state);
        std::vector<Count> times_;
    };

    /// Parity gap bookkeeping for asymmetric rings with even M: H(t) at the
    /// requested checkpoints, and the increments zeta_m = H(tau_m) - H(tau_{m-1})
    /// between consecutive renewals.
    class ParityGapTracker : public RenewalTracker
    {
    public:
        explicit ParityGapTracker(std::set<Count> checkpoints = {});

        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override;

        const std::vector<std::pair<Count, Rational>>& samples() const noexcept { return samples_; }
        const std::vector<Rational>& increments() const noexcept { return increments_; }
        // |zeta_{m+1}| <= tau_{m+1} - tau_m
        const InvariantCheck& increment_bound() const noexcept { return bound_; }

    protected:
        void on_renewal(const ChainState& state) override;

    private:
        void sample(const ChainState& state);

        std::set<Count> checkpoints_;
        std::vector<std::pair<Count, Rational>> samples_;
        std::vector<Rational> increments_;
        std::optional<std::pair<Count, Rational>> last_renewal_;
        InvariantCheck bound_{"zeta-increment-bound", true, true, 0, {}, 0, "|zeta_{m+1}| <= tau_{m+1} - tau_m"};
    };

    struct ConvergenceVerdict
    {
        enum class Mode : std::uint8_t
        {
            Symmetric,
            Flat, // asymmetric, odd M
            Comb, // asymmetric, even M
        };

        Mode mode = Mode::Symmetric;
        bool pattern_stable = false;
        PatternSignature stable_pattern;
        std::size_t stable_since_level = 0;
        std::vector<double> fractions;
        std::optional<std::size_t> matched; // index into the limit list
        std::optional<std::size_t> closest;
        double distance = 0.0;              // L-infinity distance to the closest limit
    };

    std::string_view to_string(ConvergenceVerdict::Mode mode) noexcept;

    /// Declares convergence once the last `window` level signatures agree and
    /// matches xi/total against `limits` in L-infinity with threshold epsilon.
    /// Asymmetric rings report the flat/comb mode without matching. Returns
    /// nullopt while pending.
    std::optional<ConvergenceVerdict> detect_convergence(const LevelLog& log, std::span<const Count> xi, Neighborhood kind,
                                                         std::span<const LimitConfiguration> limits, int window = 25,
                                                         double epsilon = 0.02);

    nlohmann::ordered_json to_json(const ConvergenceVerdict& verdict, std::span<const LimitConfiguration> limits);
} // namespace nq
