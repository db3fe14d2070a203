#include "nq/scaling.hpp"

#include "nq/ensemble.hpp"
#include "nq/observers.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace nq
{
    LinearFit fit_through_origin(std::span<const std::pair<double, double>> points)
    {
        if (points.empty())
        {
            throw std::invalid_argument("fit needs at least one point");
        }
        double sxy = 0.0;
        double sxx = 0.0;
        double mean_y = 0.0;
        for (const auto& [x, y] : points)
        {
            sxy += x * y;
            sxx += x * x;
            mean_y += y;
        }
        mean_y /= static_cast<double>(points.size());
        LinearFit fit;
        fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
        double ss_res = 0.0;
        double ss_tot = 0.0;
        for (const auto& [x, y] : points)
        {
            ss_res += (y - fit.slope * x) * (y - fit.slope * x);
            ss_tot += (y - mean_y) * (y - mean_y);
        }
        fit.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : (ss_res == 0.0 ? 1.0 : 0.0);
        return fit;
    }

    double kolmogorov_survival(double lambda)
    {
        if (lambda <= 0.0)
        {
            return 1.0;
        }
        if (lambda < 1.18)
        {
            // Jacobi-transformed form converges fast for small lambda.
            const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
            double sum = 0.0;
            for (int j = 1; j <= 7; ++j)
            {
                sum += std::pow(y, (2 * j - 1) * (2 * j - 1));
            }
            return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
        }
        double sum = 0.0;
        for (int j = 1; j <= 100; ++j)
        {
            const double term = std::exp(-2.0 * j * j * lambda * lambda);
            sum += (j % 2 == 1 ? term : -term);
            if (term < 1e-17)
            {
                break;
            }
        }
        return std::clamp(2.0 * sum, 0.0, 1.0);
    }

    KsResult ks_test_standard_normal(std::vector<double> samples)
    {
        if (samples.empty())
        {
            throw std::invalid_argument("KS test needs samples");
        }
        std::sort(samples.begin(), samples.end());
        const double n = static_cast<double>(samples.size());
        double d = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            const double f = 0.5 * std::erfc(-samples[i] / std::numbers::sqrt2);
            d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
        }
        const double root = std::sqrt(n);
        return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
    }

    namespace
    {
        // Tally of zeta increments: signs and exceedance counts for c = 1..max_c.
        struct IncrementTally
        {
            std::int64_t positive = 0;
            std::int64_t negative = 0;
            std::int64_t zeros = 0;
            std::vector<std::int64_t> above;

            explicit IncrementTally(int max_c) : above(static_cast<std::size_t>(std::max(max_c, 0)), 0) {}

            void add(const Rational& z)
            {
                if (z > Rational(0))
                {
                    ++positive;
                }
                else if (z < Rational(0))
                {
                    ++negative;
                }
                else
                {
                    ++zeros;
                }
                const Rational magnitude = boost::abs(z);
                for (std::size_t c = 0; c < above.size() && magnitude > Rational(static_cast<std::int64_t>(c + 1)); ++c)
                {
                    ++above[c];
                }
            }

            void merge(const IncrementTally& other)
            {
                positive += other.positive;
                negative += other.negative;
                zeros += other.zeros;
                for (std::size_t c = 0; c < above.size(); ++c)
                {
                    above[c] += other.above[c];
                }
            }

            std::int64_t count() const { return positive + negative + zeros; }

            SignTest sign() const
            {
                SignTest test{positive, negative, zeros, 1.0};
                const auto n = positive + negative;
                if (n > 0)
                {
                    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
                    const auto low = std::min(positive, negative);
                    test.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, static_cast<double>(low)));
                }
                return test;
            }

            TailCheck tail() const
            {
                TailCheck check;
                const auto n = count();
                if (n == 0 || above.empty())
                {
                    return check;
                }
                for (auto a : above)
                {
                    check.tail.push_back(static_cast<double>(a) / static_cast<double>(n));
                }
                for (std::size_t c = 1; c < check.tail.size(); ++c)
                {
                    if (check.tail[c] > check.tail[c - 1])
                    {
                        check.passed = false;
                    }
                    if (check.tail.front() > 0.0 && check.tail[c] > 0.0)
                    {
                        const double r = std::pow(check.tail[c] / check.tail.front(), 1.0 / static_cast<double>(c));
                        check.ratio = std::max(check.ratio, r);
                    }
                }
                check.passed = check.passed && check.ratio < 1.0;
                return check;
            }
        };

        IncrementTally tally(std::span<const Rational> increments, int max_c)
        {
            IncrementTally t(max_c);
            for (const auto& z : increments)
            {
                t.add(z);
            }
            return t;
        }
    } // namespace

    SignTest sign_test(std::span<const Rational> increments) { return tally(increments, 0).sign(); }

    TailCheck exponential_tail_check(std::span<const Rational> increments, int max_c)
    {
        return tally(increments, max_c).tail();
    }

    std::vector<Count> default_checkpoints(Count t_max)
    {
        std::set<Count> points;
        for (int k = 0; k <= 6; ++k)
        {
            const Count t = t_max >> k;
            if (t > 0)
            {
                points.insert(t);
            }
        }
        return {points.begin(), points.end()};
    }

    namespace
    {
        struct GapSamples
        {
            std::vector<std::int64_t> scaled; // M * H(t) at each checkpoint
            IncrementTally increments{10};
        };
    } // namespace

    SigmaEstimate estimate_sigma(const SigmaConfig& config)
    {
        if (config.sites % 2 != 0)
        {
            throw std::invalid_argument("the parity gap scales only for an even number of sites; with odd M the "
                                        "fluctuation term vanishes");
        }
        if (config.replicas < 2)
        {
            throw std::invalid_argument("estimate_sigma needs at least 2 replicas");
        }
        if (config.checkpoints.empty() || config.checkpoints.front() <= 0 ||
            !std::is_sorted(config.checkpoints.begin(), config.checkpoints.end()))
        {
            throw std::invalid_argument("checkpoints must be positive and ascending");
        }
        const Ring ring(config.sites, Neighborhood::Asymmetric);
        const Count horizon = config.checkpoints.back();
        const std::set<Count> wanted(config.checkpoints.begin(), config.checkpoints.end());
        const auto rule = AllocationRule::min_rule();

        auto per_replica = run_replicas(config.replicas, config.jobs, [&](int r) {
            RandomStream rng(config.seed, static_cast<std::uint64_t>(r));
            ParityGapTracker tracker(wanted);
            Observer* obs[] = {&tracker};
            run(ChainState::empty(ring), rule, rng, obs, RunOptions{.steps = horizon});
            GapSamples out;
            for (const auto& [t, h] : tracker.samples())
            {
                out.scaled.push_back((h * config.sites).numerator());
            }
            out.increments = tally(tracker.increments(), 10);
            return out;
        });

        SigmaEstimate est;
        const auto points = wanted.size();
        const double n = static_cast<double>(config.replicas);
        const double m2 = static_cast<double>(config.sites) * config.sites;
        std::vector<std::pair<double, double>> fit_points;
        std::size_t idx = 0;
        for (Count t : wanted)
        {
            // Integer sums keep the variance independent of replica order.
            std::int64_t sum = 0;
            std::int64_t sum_sq = 0;
            for (const auto& rep : per_replica)
            {
                sum += rep.scaled[idx];
                sum_sq += rep.scaled[idx] * rep.scaled[idx];
            }
            const double var = (static_cast<double>(sum_sq) - static_cast<double>(sum) * static_cast<double>(sum) / n) /
                               (n - 1.0) / m2;
            est.variance_samples.emplace_back(t, var);
            fit_points.emplace_back(static_cast<double>(t), var);
            ++idx;
        }
        const auto fit = fit_through_origin(fit_points);
        est.slope = fit.slope;
        est.r2 = fit.r2;
        est.sigma_hat = std::sqrt(std::max(0.0, fit.slope));

        if (config.replicas >= kMinimumScalingReplicas && est.sigma_hat > 0.0)
        {
            std::vector<double> z;
            z.reserve(per_replica.size());
            const double scale = est.sigma_hat * std::sqrt(static_cast<double>(horizon)) * config.sites;
            for (const auto& rep : per_replica)
            {
                z.push_back(static_cast<double>(rep.scaled[points - 1]) / scale);
            }
            est.ks = ks_test_standard_normal(std::move(z));
        }
        else
        {
            est.warnings.push_back("replicas below " + std::to_string(kMinimumScalingReplicas) +
                                   ": normality test skipped");
        }

        IncrementTally increments(10);
        for (const auto& rep : per_replica)
        {
            increments.merge(rep.increments);
        }
        est.renewals = increments.count();
        est.zeta_sign = increments.sign();
        est.zeta_tail = increments.tail();
        return est;
    }

    nlohmann::ordered_json to_json(const SigmaEstimate& est)
    {
        nlohmann::ordered_json j;
        j["sigma_hat"] = est.sigma_hat;
        j["slope"] = est.slope;
        j["r2"] = est.r2;
        auto samples = nlohmann::ordered_json::array();
        for (const auto& [t, v] : est.variance_samples)
        {
            samples.push_back({{"t", t}, {"var", v}});
        }
        j["variance_samples"] = std::move(samples);
        j["ks_stat"] = est.ks ? nlohmann::ordered_json(est.ks->statistic) : nlohmann::ordered_json();
        j["ks_p"] = est.ks ? nlohmann::ordered_json(est.ks->p_value) : nlohmann::ordered_json();
        j["zeta_increments"] = est.renewals;
        j["zeta_sign"] = {{"positive", est.zeta_sign.positive},
                          {"negative", est.zeta_sign.negative},
                          {"zeros", est.zeta_sign.zeros},
                          {"p", est.zeta_sign.p_value}};
        j["zeta_tail"] = {{"tail", est.zeta_tail.tail}, {"ratio", est.zeta_tail.ratio}, {"passed", est.zeta_tail.passed}};
        j["warnings"] = est.warnings;
        return j;
    }

    std::string_view to_string(FreezeKind kind) noexcept
    {
        switch (kind)
        {
        case FreezeKind::SingleSite:
            return "single-site";
        case FreezeKind::AdjacentPair:
            return "adjacent-pair";
        case FreezeKind::Unfrozen:
            return "unfrozen";
        }
        return "unknown";
    }

    Count freeze_window(Count steps) noexcept { return std::max<Count>(1000, steps / 10); }

    FreezeOutcome classify_freeze(std::span<const int> allocations, const Ring& ring, const Occupancy& initial)
    {
        ChainState state(ring, initial);
        auto argmax = [&] {
            std::vector<int> s;
            const Count top = state.max_u();
            for (int i = 0; i < state.size(); ++i)
            {
                if (state.u()[i] == top)
                {
                    s.push_back(i);
                }
            }
            return s;
        };

        const auto steps = static_cast<Count>(allocations.size());
        auto current = argmax();
        Count changed_at = 0;
        for (Count t = 0; t < steps; ++t)
        {
            state.allocate(allocations[static_cast<std::size_t>(t)]);
            auto next = argmax();
            if (next != current)
            {
                current = std::move(next);
                changed_at = t + 1;
            }
        }

        FreezeOutcome out;
        const Count window = freeze_window(steps);
        if (steps - changed_at < window)
        {
            return out;
        }
        const auto tail = allocations.subspan(static_cast<std::size_t>(steps - window));
        auto inside = [&](int s) { return std::find(current.begin(), current.end(), s) != current.end(); };
        if (!std::all_of(tail.begin(), tail.end(), inside))
        {
            return out;
        }
        if (current.size() == 1)
        {
            out.kind = FreezeKind::SingleSite;
            out.site = current.front();
        }
        else if (current.size() == 2)
        {
            const int a = current[0];
            const int b = current[1];
            int k = -1;
            if (ring.wrap(a + 1) == b)
            {
                k = a;
            }
            else if (ring.wrap(b + 1) == a)
            {
                k = b;
            }
            const bool both = std::find(tail.begin(), tail.end(), a) != tail.end() &&
                              std::find(tail.begin(), tail.end(), b) != tail.end();
            if (k < 0 || !both)
            {
                return out;
            }
            out.kind = FreezeKind::AdjacentPair;
            out.site = k;
            out.partner = ring.wrap(k + 1);
        }
        else
        {
            return out;
        }
        out.freeze_time = changed_at;
        return out;
    }

    nlohmann::ordered_json to_json(const FreezeOutcome& outcome)
    {
        nlohmann::ordered_json j;
        j["outcome"] = std::string(to_string(outcome.kind));
        if (outcome.kind == FreezeKind::Unfrozen)
        {
            j["sites"] = nlohmann::ordered_json::array();
        }
        else if (outcome.kind == FreezeKind::SingleSite)
        {
            j["sites"] = {outcome.site + 1};
        }
        else
        {
            j["sites"] = {outcome.site + 1, outcome.partner + 1};
        }
        j["freeze_time"] = outcome.freeze_time ? nlohmann::ordered_json(*outcome.freeze_time) : nlohmann::ordered_json();
        return j;
    }

    void AllocationRecorder::begin(const ChainState&, Count horizon)
    {
        sites_.clear();
        sites_.reserve(static_cast<std::size_t>(std::max<Count>(horizon, 0)));
    }

    double total_variation(std::span<const double> p, std::span<const double> q)
    {
        if (p.size() != q.size())
        {
            throw std::invalid_argument("total variation of vectors with different lengths");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            s += std::abs(p[i] - q[i]);
        }
        return 0.5 * s;
    }

    KernelLimitReport kernel_limit_check(const ChainState& state, double beta_small, double beta_large, double threshold)
    {
        KernelLimitReport report;
        std::vector<Count> distinct(state.u().begin(), state.u().end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() > 1)
        {
            report.gap_below = distinct[1] - distinct[0];
            report.gap_above = distinct[distinct.size() - 1] - distinct[distinct.size() - 2];
        }

        const auto p_min = transition_distribution(state, AllocationRule::min_rule());
        const auto p_max = transition_distribution(state, AllocationRule::max_rule());
        const auto p_small = transition_distribution(state, AllocationRule::softmax(beta_small));
        const auto p_large = transition_distribution(state, AllocationRule::softmax(beta_large));
        const auto p_unit = transition_distribution(state, AllocationRule::softmax(1.0));
        const std::vector<double> uniform(static_cast<std::size_t>(state.size()), 1.0 / state.size());

        report.tv_small_to_min = total_variation(p_small, p_min);
        report.tv_large_to_max = total_variation(p_large, p_max);
        report.tv_unit_to_uniform = total_variation(p_unit, uniform);
        // With no gap the softmax and extreme kernels coincide.
        const bool small_ok = distinct.size() == 1 || report.tv_small_to_min <= threshold;
        const bool large_ok = distinct.size() == 1 || report.tv_large_to_max <= threshold;
        report.passed = small_ok && large_ok && report.tv_unit_to_uniform == 0.0;
        return report;
    }
} // namespace nq
