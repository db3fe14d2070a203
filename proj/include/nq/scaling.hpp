#pragma once

#include "nq/dynamics.hpp"
#include "nq/rational.hpp"
#include "nq/ring.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nq
{
    struct LinearFit
    {
        double slope = 0.0;
        double r2 = 0.0; // centred coefficient of determination
    };

    // Least squares y = slope * x.
    LinearFit fit_through_origin(std::span<const std::pair<double, double>> points);

    struct KsResult
    {
        double statistic = 0.0;
        double p_value = 1.0;
    };

    // Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
    double kolmogorov_survival(double lambda);

    // One-sample KS test against N(0,1), p from the asymptotic distribution
    // with the (sqrt(n) + 0.12 + 0.11/sqrt(n)) small-sample correction.
    KsResult ks_test_standard_normal(std::vector<double> samples);

    struct SignTest
    {
        std::int64_t positive = 0;
        std::int64_t negative = 0;
        std::int64_t zeros = 0;
        double p_value = 1.0; // exact two-sided binomial, zeros dropped
    };

    SignTest sign_test(std::span<const Rational> increments);

    struct TailCheck
    {
        std::vector<double> tail; // P(|zeta| > c) for c = 1..max_c
        double ratio = 0.0;       // max over c of (p_c / p_1)^(1/(c-1))
        bool passed = true;
    };

    // Empirical tails must be non-increasing and bounded by p_1 r^(c-1) for some r < 1.
    TailCheck exponential_tail_check(std::span<const Rational> increments, int max_c = 10);

    struct SigmaConfig
    {
        int sites = 4;
        int replicas = 1000;
        std::vector<Count> checkpoints; // ascending, positive
        std::uint64_t seed = 0;
        int jobs = 1;
    };

    // Checkpoints t_max / 2^k for k = 0..6, ascending and de-duplicated.
    std::vector<Count> default_checkpoints(Count t_max);

    struct SigmaEstimate
    {
        double sigma_hat = 0.0;
        double slope = 0.0;
        double r2 = 0.0;
        std::vector<std::pair<Count, double>> variance_samples; // (t, Var H(t))
        std::optional<KsResult> ks;                             // skipped below 100 replicas
        SignTest zeta_sign;
        TailCheck zeta_tail;
        std::int64_t renewals = 0;
        std::vector<std::string> warnings;
    };

    inline constexpr int kMinimumScalingReplicas = 100;

    /// Runs independent min-rule chains on an asymmetric ring with an even
    /// number of sites from empty, replica r on stream r, and fits
    /// Var H(t) = sigma^2 t across the checkpoints.
    SigmaEstimate estimate_sigma(const SigmaConfig& config);

    nlohmann::ordered_json to_json(const SigmaEstimate& estimate);

    enum class FreezeKind : std::uint8_t
    {
        SingleSite,
        AdjacentPair,
        Unfrozen,
    };

    std::string_view to_string(FreezeKind kind) noexcept;

    struct FreezeOutcome
    {
        FreezeKind kind = FreezeKind::Unfrozen;
        int site = -1;    // k for SingleSite(k) and AdjacentPair(k, k+1), 0-based
        int partner = -1; // k+1 (wrapped) for AdjacentPair
        std::optional<Count> freeze_time;
    };

    // max(1000, T/10)
    Count freeze_window(Count steps) noexcept;

    /// Replays an allocation sequence and classifies the final argmax set:
    /// frozen when it has been constant over the last freeze_window(T) steps
    /// and every allocation in that window landed inside it.
    FreezeOutcome classify_freeze(std::span<const int> allocations, const Ring& ring, const Occupancy& initial);

    nlohmann::ordered_json to_json(const FreezeOutcome& outcome);

    // Collects allocated sites for classify_freeze.
    class AllocationRecorder : public Observer
    {
    public:
        void begin(const ChainState& initial, Count horizon) override;
        void on_step(const StepEvent& event) override { sites_.push_back(event.site); }
        const std::vector<int>& sites() const noexcept { return sites_; }

    private:
        std::vector<int> sites_;
    };

    double total_variation(std::span<const double> p, std::span<const double> q);

    struct KernelLimitReport
    {
        double tv_small_to_min = 0.0;
        double tv_large_to_max = 0.0;
        double tv_unit_to_uniform = 0.0;
        Count gap_below = 0; // second-smallest distinct potential minus the minimum (0 if flat)
        Count gap_above = 0; // maximum minus second-largest distinct potential (0 if flat)
        bool passed = true;
    };

    KernelLimitReport kernel_limit_check(const ChainState& state, double beta_small = 1e-4, double beta_large = 1e4,
                                         double threshold = 1e-3);
} // namespace nq
