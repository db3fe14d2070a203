#include "nq/verify.hpp"

#include "nq/dynamics.hpp"
#include "nq/ensemble.hpp"
#include "nq/limit_enum.hpp"
#include "nq/observers.hpp"
#include "nq/potential_algebra.hpp"
#include "nq/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace nq
{
    namespace
    {
        using json = nlohmann::ordered_json;

        struct ReplicaOutcome
        {
            std::vector<InvariantCheck> checks;
            json summary;
        };

        struct MergedCheck
        {
            std::string id;
            bool hard = true;
            std::string detail;
            Count violations = 0;
            Count early_violations = 0;
            int failed_replicas = 0;
            std::optional<std::pair<int, Count>> first; // (replica, step)
        };

        class Merger
        {
        public:
            void add(int replica, const InvariantCheck& check)
            {
                auto it = std::find_if(merged_.begin(), merged_.end(), [&](const auto& m) { return m.id == check.id; });
                if (it == merged_.end())
                {
                    merged_.push_back(MergedCheck{.id = check.id, .hard = check.hard, .detail = check.detail, .first = {}});
                    it = std::prev(merged_.end());
                }
                it->violations += check.violations;
                it->early_violations += check.early_violations;
                if (!check.passed)
                {
                    ++it->failed_replicas;
                    if (!it->first)
                    {
                        it->first = std::pair{replica, check.first_violation.value_or(0)};
                    }
                }
            }

            bool passed() const
            {
                return std::none_of(merged_.begin(), merged_.end(),
                                    [](const auto& m) { return m.hard && m.failed_replicas > 0; });
            }

            json to_json(const char* unit) const
            {
                auto out = json::array();
                for (const auto& m : merged_)
                {
                    json j;
                    j["id"] = m.id;
                    j["hard"] = m.hard;
                    j["passed"] = m.failed_replicas == 0;
                    j["violations"] = m.violations;
                    j["failed_replicas"] = m.failed_replicas;
                    j["early_violations"] = m.early_violations;
                    if (m.first)
                    {
                        j["first_violation"] = {{unit, m.first->first}, {"step", m.first->second}};
                    }
                    else
                    {
                        j["first_violation"] = nullptr;
                    }
                    j["detail"] = m.detail;
                    out.push_back(std::move(j));
                }
                return out;
            }

        private:
            std::vector<MergedCheck> merged_;
        };

        json config_json(const VerifyConfig& c)
        {
            json j;
            j["suite"] = std::string(to_string(c.suite));
            j["m"] = c.sites;
            if (c.suite == Suite::Appendix)
            {
                j["neighborhood"] = std::string(to_string(c.kind));
            }
            if (c.suite != Suite::Algebra)
            {
                j["steps"] = c.steps;
                j["replicas"] = c.replicas;
            }
            else
            {
                j["samples"] = c.algebra_samples;
            }
            j["seed"] = c.seed;
            j["rng"] = std::string(RandomStream::algorithm);
            return j;
        }

        InvariantCheck make_check(std::string id, bool hard, std::string detail)
        {
            return InvariantCheck{std::move(id), hard, true, 0, {}, 0, std::move(detail)};
        }

        RunResult run_replica(const Ring& ring, const AllocationRule& rule, const VerifyConfig& c, int replica,
                              std::span<Observer* const> observers)
        {
            RandomStream rng(c.seed, static_cast<std::uint64_t>(replica));
            return run(ChainState::empty(ring), rule, rng, observers, RunOptions{.steps = c.steps});
        }

        VerifyReport assemble(const VerifyConfig& c, std::span<const ReplicaOutcome> outcomes, json extra = {})
        {
            Merger merger;
            for (std::size_t r = 0; r < outcomes.size(); ++r)
            {
                for (const auto& check : outcomes[r].checks)
                {
                    merger.add(static_cast<int>(r), check);
                }
            }
            VerifyReport report;
            report.passed = merger.passed();
            report.json["suite"] = std::string(to_string(c.suite));
            report.json["config"] = config_json(c);
            report.json["passed"] = report.passed;
            report.json["checks"] = merger.to_json("replica");
            if (!extra.is_null())
            {
                for (auto& [k, v] : extra.items())
                {
                    report.json[k] = v;
                }
            }
            return report;
        }

        VerifyReport asymmetric_suite(const VerifyConfig& c, bool even)
        {
            if ((c.sites % 2 == 0) != even)
            {
                throw std::invalid_argument(even ? "suite asym-even needs an even number of sites"
                                                 : "suite asym-odd needs an odd number of sites");
            }
            const Ring ring(c.sites, Neighborhood::Asymmetric);
            const auto rule = AllocationRule::min_rule();
            const int n = c.sites;

            auto outcomes = run_replicas(c.replicas, c.jobs, [&](int r) {
                LevelObserver levels;
                AsymmetricBoundsMonitor bounds(1.0 - c.tail_fraction);
                ParityMonitor parity;
                ParityGapTracker gaps;
                std::vector<Observer*> obs{&levels, &bounds};
                if (even)
                {
                    obs.push_back(&parity);
                    obs.push_back(&gaps);
                }
                const auto result = run_replica(ring, rule, c, r, obs);

                ReplicaOutcome out;
                out.checks.push_back(check_s_monotone(levels.log()));
                for (auto& check : bounds.checks())
                {
                    out.checks.push_back(std::move(check));
                }
                const auto xi = result.final_state.xi();
                const double total = static_cast<double>(result.final_state.total());
                double deviation = 0.0;
                for (Count x : xi)
                {
                    deviation = std::max(deviation, total > 0 ? std::abs(static_cast<double>(x) / total - 1.0 / n) : 0.0);
                }
                out.summary["levels"] = levels.log().size();
                if (even)
                {
                    out.checks.push_back(parity.check());
                    out.checks.push_back(gaps.increment_bound());
                    auto recurrence =
                        make_check("renewal-recurrence", true, "at least " + std::to_string(c.min_renewals) + " renewals");
                    const auto renewals = static_cast<Count>(gaps.renewal_times().size());
                    if (renewals < c.min_renewals)
                    {
                        recurrence.fail(result.final_state.t());
                    }
                    out.checks.push_back(std::move(recurrence));
                    out.summary["renewals"] = renewals;
                    out.summary["parity_gap"] = to_string(parity_gap(xi));
                }
                else
                {
                    const double bound = total > 0 ? 2.0 * n * (n - 1) / total + 1e-3 : 0.0;
                    auto flat = make_check("asym-flat-fractions", true, "max |xi_i/T - 1/M| <= 2M(M-1)/T + 1e-3");
                    if (deviation > bound)
                    {
                        flat.fail(result.final_state.t());
                    }
                    out.checks.push_back(std::move(flat));
                }
                out.summary["max_fraction_deviation"] = deviation;
                return out;
            });

            json extra;
            auto per = json::array();
            Count min_renewals = -1;
            double worst = 0.0;
            for (const auto& o : outcomes)
            {
                per.push_back(o.summary);
                worst = std::max(worst, o.summary["max_fraction_deviation"].get<double>());
                if (even)
                {
                    const auto k = o.summary["renewals"].get<Count>();
                    min_renewals = min_renewals < 0 ? k : std::min(min_renewals, k);
                }
            }
            extra["max_fraction_deviation"] = worst;
            if (even)
            {
                extra["min_renewals"] = min_renewals;
            }
            extra["replica_summaries"] = std::move(per);
            return assemble(c, outcomes, std::move(extra));
        }

        VerifyReport symmetric_suite(const VerifyConfig& c)
        {
            const Ring ring(c.sites, Neighborhood::Symmetric);
            const auto rule = AllocationRule::min_rule();
            const auto limits = enumerate_limits(c.sites);
            const bool mod3 = c.sites % 3 == 0;

            struct Result
            {
                ReplicaOutcome outcome;
                std::optional<std::size_t> matched;
            };

            auto results = run_replicas(c.replicas, c.jobs, [&](int r) {
                LevelObserver levels;
                Mod3Monitor residues;
                std::vector<Observer*> obs{&levels};
                if (mod3)
                {
                    obs.push_back(&residues);
                }
                const auto result = run_replica(ring, rule, c, r, obs);

                Result out;
                out.outcome.checks = check_symmetric_levels(levels.log(), c.tail_fraction);
                if (mod3)
                {
                    out.outcome.checks.push_back(residues.check());
                }
                const auto verdict = detect_convergence(levels.log(), result.final_state.xi(), Neighborhood::Symmetric,
                                                        limits, c.stability_window, c.epsilon);
                auto converged = make_check("converged", false, "stable pattern matched to a limiting configuration");
                auto starred = make_check("no-starred-limit", true, "matched limits are achievable from empty");
                if (verdict && verdict->matched)
                {
                    out.matched = verdict->matched;
                    if (!limits[*verdict->matched].achievable_from_empty)
                    {
                        starred.fail(result.final_state.t());
                    }
                }
                else
                {
                    converged.fail(result.final_state.t());
                }
                out.outcome.checks.push_back(std::move(converged));
                out.outcome.checks.push_back(std::move(starred));
                out.outcome.summary = verdict ? to_json(*verdict, limits) : json();
                return out;
            });

            std::vector<ReplicaOutcome> outcomes;
            std::map<std::size_t, int> histogram;
            int converged = 0;
            for (auto& res : results)
            {
                if (res.matched)
                {
                    ++histogram[*res.matched];
                    ++converged;
                }
                outcomes.push_back(std::move(res.outcome));
            }
            json extra;
            extra["converged_replicas"] = converged;
            auto matches = json::array();
            for (const auto& [index, count] : histogram)
            {
                auto xs = json::array();
                for (const auto& x : limits[index].x)
                {
                    xs.push_back(to_string(x));
                }
                matches.push_back({{"x", std::move(xs)},
                                   {"achievable_from_empty", limits[index].achievable_from_empty},
                                   {"count", count}});
            }
            extra["matched_limits"] = std::move(matches);
            return assemble(c, outcomes, std::move(extra));
        }

        // After an allocation at k the maximum sits inside the window around k.
        class ArgmaxLocality : public Observer
        {
        public:
            void on_step(const StepEvent& event) override
            {
                const auto& state = event.state;
                const Count top = state.max_u();
                const auto& ring = state.ring();
                for (int i = 0; i < state.size(); ++i)
                {
                    const bool near = i == event.site || i == ring.wrap(event.site - 1) || i == ring.wrap(event.site + 1);
                    if (state.u()[i] == top && !near)
                    {
                        check_.fail(state.t());
                        return;
                    }
                }
            }
            const InvariantCheck& check() const noexcept { return check_; }

        private:
            InvariantCheck check_ = make_check("max-argmax-local", true, "argmax u within {k-1, k, k+1} of the last allocation");
        };

        VerifyReport appendix_suite(const VerifyConfig& c)
        {
            const Ring ring(c.sites, c.kind);
            const auto rule = AllocationRule::max_rule();
            const bool symmetric = c.kind == Neighborhood::Symmetric;

            struct Result
            {
                ReplicaOutcome outcome;
                FreezeKind kind;
            };

            auto results = run_replicas(c.replicas, c.jobs, [&](int r) {
                AllocationRecorder recorder;
                ArgmaxLocality locality;
                std::vector<Observer*> obs{&recorder};
                if (symmetric)
                {
                    obs.push_back(&locality);
                }
                const auto result = run_replica(ring, rule, c, r, obs);
                const auto freeze = classify_freeze(recorder.sites(), ring, Occupancy::empty(c.sites));

                Result out{{}, freeze.kind};
                const Count t = result.final_state.t();
                if (symmetric)
                {
                    out.outcome.checks.push_back(locality.check());
                    auto frozen = make_check("frozen", true, "single site or adjacent pair");
                    if (freeze.kind == FreezeKind::Unfrozen)
                    {
                        frozen.fail(t);
                    }
                    auto share = make_check("pair-share", true, "|xi_k/T - 1/2| <= tolerance for both pair sites");
                    if (freeze.kind == FreezeKind::AdjacentPair)
                    {
                        const auto xi = result.final_state.xi();
                        for (int k : {freeze.site, freeze.partner})
                        {
                            if (std::abs(static_cast<double>(xi[k]) / static_cast<double>(t) - 0.5) >
                                c.pair_share_tolerance)
                            {
                                share.fail(t);
                                break;
                            }
                        }
                    }
                    out.outcome.checks.push_back(std::move(frozen));
                    out.outcome.checks.push_back(std::move(share));
                }
                else
                {
                    auto single = make_check("single-site", true, "every run freezes on one site");
                    if (freeze.kind != FreezeKind::SingleSite)
                    {
                        single.fail(t);
                    }
                    out.outcome.checks.push_back(std::move(single));
                }
                out.outcome.summary = to_json(freeze);
                return out;
            });

            std::vector<ReplicaOutcome> outcomes;
            std::map<std::string, int> counts{{"single-site", 0}, {"adjacent-pair", 0}, {"unfrozen", 0}};
            auto per = json::array();
            for (auto& res : results)
            {
                ++counts[std::string(to_string(res.kind))];
                per.push_back(res.outcome.summary);
                outcomes.push_back(std::move(res.outcome));
            }
            json extra;
            extra["outcomes"] = {{"single-site", counts["single-site"]},
                                 {"adjacent-pair", counts["adjacent-pair"]},
                                 {"unfrozen", counts["unfrozen"]}};
            extra["freeze"] = std::move(per);
            return assemble(c, outcomes, std::move(extra));
        }

        RationalVector random_occupancy(RandomStream& rng, int n, std::uint64_t range)
        {
            RationalVector xi;
            for (int i = 0; i < n; ++i)
            {
                xi.emplace_back(static_cast<std::int64_t>(rng.next_u64() % range));
            }
            return xi;
        }

        void algebra_kind(Neighborhood kind, const VerifyConfig& c, RandomStream& rng, Merger& merger, json& summary)
        {
            const int n = c.sites;
            const bool singular = kind == Neighborhood::Asymmetric ? n % 2 == 0 : n % 3 == 0;
            const std::string tag(to_string(kind));
            if (!singular)
            {
                auto check = make_check("roundtrip-" + tag, true, "solve(potentials(xi)) == Unique(xi)");
                for (int s = 0; s < c.algebra_samples; ++s)
                {
                    const auto xi = random_occupancy(rng, n, 1000);
                    const auto outcome = solve_occupancy(apply_windows(xi, kind), kind);
                    const auto* unique = std::get_if<Unique>(&outcome);
                    if (unique == nullptr || unique->xi != xi)
                    {
                        check.fail(s);
                    }
                }
                merger.add(0, check);
                summary["roundtrip_" + tag] = c.algebra_samples;
                return;
            }

            const int params = kind == Neighborhood::Asymmetric ? 1 : 2;
            const auto expected =
                kind == Neighborhood::Asymmetric ? SolvabilityCondition::AlternatingSums : SolvabilityCondition::ResidueClassSums;
            auto family = make_check("family-" + tag, true, "every family member reproduces u");
            auto infeasible = make_check("infeasible-" + tag, true, "broken sum condition gives Infeasible");
            for (int s = 0; s < c.algebra_samples; ++s)
            {
                const auto xi = random_occupancy(rng, n, 1000);
                auto u = apply_windows(xi, kind);
                const auto outcome = solve_occupancy(u, kind);
                const auto* fam = std::get_if<Family>(&outcome);
                if (fam == nullptr || fam->free_parameters != params)
                {
                    family.fail(s);
                }
                else
                {
                    RationalVector p;
                    for (int k = 0; k < params; ++k)
                    {
                        p.emplace_back(static_cast<std::int64_t>(rng.next_u64() % 41) - 20,
                                       static_cast<std::int64_t>(rng.next_u64() % 7) + 1);
                    }
                    if (apply_windows(family_member(*fam, p), kind) != u)
                    {
                        family.fail(s);
                    }
                }

                // A nonzero shift at a single site moves exactly one class sum.
                const auto site = static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(n));
                const auto shift = static_cast<std::int64_t>(rng.next_u64() % 20) + 1;
                u[site] += (rng.next_u64() & 1U) != 0 ? shift : -shift;
                const auto broken = solve_occupancy(u, kind);
                const auto* inf = std::get_if<Infeasible>(&broken);
                if (inf == nullptr || inf->violated != expected)
                {
                    infeasible.fail(s);
                }
            }
            merger.add(0, family);
            merger.add(0, infeasible);
            summary["family_" + tag] = c.algebra_samples;
            summary["infeasible_" + tag] = c.algebra_samples;
        }

        VerifyReport algebra_suite(const VerifyConfig& c)
        {
            if (c.sites < Ring::minimum_sites(Neighborhood::Asymmetric))
            {
                throw std::invalid_argument("algebra suite needs at least 3 sites");
            }
            RandomStream rng(c.seed, 0);
            Merger merger;
            json summary;
            algebra_kind(Neighborhood::Asymmetric, c, rng, merger, summary);
            if (c.sites >= Ring::minimum_sites(Neighborhood::Symmetric))
            {
                algebra_kind(Neighborhood::Symmetric, c, rng, merger, summary);
            }
            VerifyReport report;
            report.passed = merger.passed();
            report.json["suite"] = std::string(to_string(c.suite));
            report.json["config"] = config_json(c);
            report.json["passed"] = report.passed;
            report.json["checks"] = merger.to_json("kind");
            report.json["samples"] = std::move(summary);
            return report;
        }
    } // namespace

    std::string_view to_string(Suite suite) noexcept
    {
        switch (suite)
        {
        case Suite::AsymOdd:
            return "asym-odd";
        case Suite::AsymEven:
            return "asym-even";
        case Suite::Symmetric:
            return "sym";
        case Suite::Appendix:
            return "appendix";
        case Suite::Algebra:
            return "algebra";
        }
        return "unknown";
    }

    Suite parse_suite(std::string_view name)
    {
        for (Suite s : {Suite::AsymOdd, Suite::AsymEven, Suite::Symmetric, Suite::Appendix, Suite::Algebra})
        {
            if (to_string(s) == name)
            {
                return s;
            }
        }
        throw std::invalid_argument("unknown suite '" + std::string(name) +
                                    "' (expected asym-odd, asym-even, sym, appendix or algebra)");
    }

    VerifyReport run_suite(const VerifyConfig& config)
    {
        if (config.suite != Suite::Algebra && (config.replicas < 1 || config.steps < 0))
        {
            throw std::invalid_argument("verification needs at least one replica and a non-negative step count");
        }
        switch (config.suite)
        {
        case Suite::AsymOdd:
            return asymmetric_suite(config, false);
        case Suite::AsymEven:
            return asymmetric_suite(config, true);
        case Suite::Symmetric:
            return symmetric_suite(config);
        case Suite::Appendix:
            return appendix_suite(config);
        case Suite::Algebra:
            return algebra_suite(config);
        }
        throw std::invalid_argument("unknown suite");
    }
} // namespace nq
