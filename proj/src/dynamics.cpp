#include "nq/dynamics.hpp"

#include "nq/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace nq
{
    AllocationRule AllocationRule::softmax(double beta)
    {
        if (!std::isfinite(beta) || beta <= 0.0)
        {
            throw std::invalid_argument("softmax beta must be finite and positive");
        }
        return AllocationRule(Kind::Softmax, beta);
    }

    std::string AllocationRule::describe() const
    {
        switch (kind_)
        {
        case Kind::Min:
            return "min";
        case Kind::Max:
            return "max";
        case Kind::Softmax:
            break;
        }
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), beta_);
        return "softmax(" + std::string(buf, res.ptr) + ")";
    }

    AllocationRule parse_rule(std::string_view name, std::optional<double> beta)
    {
        if (name == "softmax")
        {
            if (!beta)
            {
                throw std::invalid_argument("rule softmax requires --beta");
            }
            return AllocationRule::softmax(*beta);
        }
        if (beta)
        {
            throw std::invalid_argument("--beta is only valid with rule softmax");
        }
        if (name == "min")
        {
            return AllocationRule::min_rule();
        }
        if (name == "max")
        {
            return AllocationRule::max_rule();
        }
        throw std::invalid_argument("unknown rule '" + std::string(name) + "' (expected min, softmax or max)");
    }

    ChainState::ChainState(Ring ring, const Occupancy& initial)
        : ring_(ring), total_(initial.total()), xi_(initial.counts().begin(), initial.counts().end()),
          u_(static_cast<std::size_t>(ring.size()))
    {
        if (initial.size() != ring.size())
        {
            throw std::invalid_argument("initial occupancy has " + std::to_string(initial.size()) + " sites, ring has " +
                                        std::to_string(ring.size()));
        }
        potentials_into(xi_, ring_, u_);
    }

    Count ChainState::min_u() const noexcept { return *std::min_element(u_.begin(), u_.end()); }

    Count ChainState::max_u() const noexcept { return *std::max_element(u_.begin(), u_.end()); }

    void ChainState::allocate(int site)
    {
        const int n = ring_.size();
        if (site < 0 || site >= n)
        {
            throw std::out_of_range("allocation outside the ring");
        }
        t_ = checked_add(t_, 1);
        total_ = checked_add(total_, 1);
        xi_[site] += 1;
        // site lies in U_{site-1} and U_site, and in U_{site+1} for the symmetric case.
        u_[ring_.wrap(site - 1)] += 1;
        u_[site] += 1;
        if (ring_.kind() == Neighborhood::Symmetric)
        {
            u_[ring_.wrap(site + 1)] += 1;
        }
    }

    bool ChainState::consistent() const
    {
        std::vector<Count> fresh(u_.size());
        potentials_into(xi_, ring_, fresh);
        return fresh == u_;
    }

    namespace
    {
        std::vector<double> softmax_weights(std::span<const Count> u, double beta)
        {
            std::vector<double> w(u.size(), 1.0);
            if (beta == 1.0)
            {
                return w;
            }
            const Count ref = beta < 1.0 ? *std::min_element(u.begin(), u.end()) : *std::max_element(u.begin(), u.end());
            const double log_beta = std::log(beta);
            for (std::size_t i = 0; i < u.size(); ++i)
            {
                w[i] = std::exp(static_cast<double>(u[i] - ref) * log_beta);
            }
            return w;
        }

        // Picks the index-th site (in ascending order) whose potential equals target.
        int nth_with_value(std::span<const Count> u, Count target, std::size_t index)
        {
            for (std::size_t i = 0; i < u.size(); ++i)
            {
                if (u[i] == target && index-- == 0)
                {
                    return static_cast<int>(i);
                }
            }
            throw std::logic_error("nth_with_value: index past the end");
        }

        int sample_extreme(std::span<const Count> u, Count target, double draw)
        {
            const auto n = static_cast<std::size_t>(std::count(u.begin(), u.end(), target));
            const auto index = std::min(n - 1, static_cast<std::size_t>(draw * static_cast<double>(n)));
            return nth_with_value(u, target, index);
        }
    } // namespace

    std::vector<double> transition_distribution(const ChainState& state, const AllocationRule& rule)
    {
        const auto u = state.u();
        std::vector<double> p(u.size(), 0.0);
        if (rule.kind() == AllocationRule::Kind::Softmax)
        {
            auto w = softmax_weights(u, rule.beta());
            double z = 0.0;
            for (double x : w)
            {
                z += x;
            }
            if (!std::isfinite(z) || z <= 0.0)
            {
                throw NumericError("softmax normaliser is not a positive finite number");
            }
            for (std::size_t i = 0; i < w.size(); ++i)
            {
                p[i] = w[i] / z;
            }
            return p;
        }
        const Count target = rule.kind() == AllocationRule::Kind::Min ? state.min_u() : state.max_u();
        const auto n = static_cast<double>(std::count(u.begin(), u.end(), target));
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            if (u[i] == target)
            {
                p[i] = 1.0 / n;
            }
        }
        return p;
    }

    int sample_site(const ChainState& state, const AllocationRule& rule, RandomStream& rng)
    {
        const double draw = rng.uniform();
        switch (rule.kind())
        {
        case AllocationRule::Kind::Min:
            return sample_extreme(state.u(), state.min_u(), draw);
        case AllocationRule::Kind::Max:
            return sample_extreme(state.u(), state.max_u(), draw);
        case AllocationRule::Kind::Softmax:
            break;
        }
        const auto p = transition_distribution(state, rule);
        double cumulative = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            if (p[i] > 0.0)
            {
                last_positive = static_cast<int>(i);
                cumulative += p[i];
                if (draw < cumulative)
                {
                    return last_positive;
                }
            }
        }
        // Rounding left the cumulative sum just below 1.
        return last_positive;
    }

    int step(ChainState& state, const AllocationRule& rule, RandomStream& rng)
    {
        const int site = sample_site(state, rule, rng);
        state.allocate(site);
        return site;
    }

    TrajectoryRecord TrajectoryRecord::capture(const ChainState& state, std::optional<int> site)
    {
        TrajectoryRecord r;
        r.t = state.t();
        r.xi.assign(state.xi().begin(), state.xi().end());
        r.u.assign(state.u().begin(), state.u().end());
        r.m = state.min_u();
        r.v = r.u;
        for (auto& x : r.v)
        {
            x -= r.m;
        }
        r.site = site;
        return r;
    }

    std::string to_json_line(const TrajectoryRecord& record)
    {
        nlohmann::ordered_json j;
        j["t"] = record.t;
        j["xi"] = record.xi;
        j["u"] = record.u;
        j["v"] = record.v;
        j["m"] = record.m;
        if (record.site)
        {
            j["site"] = *record.site + 1;
        }
        else
        {
            j["site"] = nullptr;
        }
        return j.dump();
    }

    void JsonLinesSink::write(const TrajectoryRecord& record)
    {
        out_ << to_json_line(record) << '\n';
        if (!out_)
        {
            throw IoError("failed to write trajectory record at t=" + std::to_string(record.t));
        }
    }

    RunResult run(ChainState initial, const AllocationRule& rule, RandomStream& rng, std::span<Observer* const> observers,
                  const RunOptions& options, const TrajectorySink& sink)
    {
        if (options.steps < 0 || options.sample_every < 0)
        {
            throw std::invalid_argument("steps and sample stride must be non-negative");
        }
        RunResult result{std::move(initial), {}};
        ChainState& state = result.final_state;

        auto emit = [&](std::optional<int> site) {
            auto record = TrajectoryRecord::capture(state, site);
            if (sink)
            {
                sink(record);
            }
            else
            {
                result.trajectory.push_back(std::move(record));
            }
        };

        for (Observer* obs : observers)
        {
            obs->begin(state, options.steps);
        }
        if (options.record_initial)
        {
            emit(std::nullopt);
        }

        Count level_min = state.min_u();
        for (Count i = 0; i < options.steps; ++i)
        {
            const Count min_before = state.min_u();
            const Count max_before = state.max_u();
            const int site = sample_site(state, rule, rng);
            const Count site_before = state.u()[site];
            state.allocate(site);
            const Count min_after = state.min_u();

            if (options.check_consistency)
            {
                if (!state.consistent())
                {
                    throw std::logic_error("incremental potentials diverged from recomputed potentials at t=" +
                                           std::to_string(state.t()));
                }
                if (rule.kind() == AllocationRule::Kind::Min && site_before != min_before)
                {
                    throw std::logic_error("min rule allocated above the minimum potential");
                }
                if (rule.kind() == AllocationRule::Kind::Max && site_before != max_before)
                {
                    throw std::logic_error("max rule allocated below the maximum potential");
                }
            }

            const StepEvent event{state, site, min_before, max_before, site_before, min_after};
            for (Observer* obs : observers)
            {
                obs->on_step(event);
            }

            const bool level_opened = min_after > level_min;
            level_min = min_after;
            const bool periodic = options.sample_every > 0 && state.t() % options.sample_every == 0;
            const bool last = i + 1 == options.steps;
            if (periodic || last || (options.record_levels && level_opened))
            {
                emit(site);
            }
        }

        for (Observer* obs : observers)
        {
            obs->finish(state);
        }
        return result;
    }
} // namespace nq
