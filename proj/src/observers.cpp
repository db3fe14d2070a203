#include "nq/observers.hpp"

#include "nq/potential_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nq
{
    namespace
    {
        int wrap(int i, int n) { return ((i % n) + n) % n; }

        constexpr PatternSymbol P0 = PatternSymbol::Zero;
        constexpr PatternSymbol PP = PatternSymbol::Positive;

        bool window_matches(const std::vector<PatternSymbol>& s, int start, std::initializer_list<PatternSymbol> window)
        {
            const int n = static_cast<int>(s.size());
            int k = start;
            for (PatternSymbol w : window)
            {
                if (s[static_cast<std::size_t>(wrap(k++, n))] != w)
                {
                    return false;
                }
            }
            return true;
        }

        bool any_window(const std::vector<PatternSymbol>& s, std::initializer_list<PatternSymbol> window)
        {
            for (int i = 0; i < static_cast<int>(s.size()); ++i)
            {
                if (window_matches(s, i, window))
                {
                    return true;
                }
            }
            return false;
        }

        bool flanked_zero(const std::vector<PatternSymbol>& s, int k) { return window_matches(s, k - 1, {PP, P0, PP}); }

        // Level-indexed check: violations at levels before `from` only count as early.
        void record(InvariantCheck& check, bool ok, std::size_t level, std::size_t from, Count t)
        {
            if (ok)
            {
                return;
            }
            if (level < from)
            {
                ++check.early_violations;
                return;
            }
            check.fail(t);
        }
    } // namespace

    std::string PatternSignature::str() const
    {
        std::string out;
        out.reserve(symbols.size());
        for (auto s : symbols)
        {
            out += s == P0 ? '0' : '*';
        }
        return out;
    }

    PatternSignature pattern(std::span<const Count> v)
    {
        PatternSignature sig;
        sig.symbols.reserve(v.size());
        for (Count x : v)
        {
            sig.symbols.push_back(x > 0 ? PP : P0);
        }
        return sig;
    }

    Count stat_S(std::span<const Count> v)
    {
        Count s = 0;
        for (Count x : v)
        {
            s += x >= 2 ? x : 0;
        }
        return s;
    }

    int stat_Q(std::span<const Count> v)
    {
        const int n = static_cast<int>(v.size());
        int q = 0;
        for (int k = 0; k < n; ++k)
        {
            q += (v[k] == 0 && v[wrap(k - 1, n)] > 0 && v[wrap(k + 1, n)] > 0) ? 1 : 0;
        }
        return q;
    }

    int stat_W(std::span<const Count> v)
    {
        const int n = static_cast<int>(v.size());
        int w = 0;
        for (int k = 0; k < n; ++k)
        {
            w += (v[k] == 0 && v[wrap(k + 1, n)] > 0 && v[wrap(k + 2, n)] > 0 && v[wrap(k + 3, n)] == 0) ? 1 : 0;
        }
        return w;
    }

    void LevelLog::on_step(const TrajectoryRecord& record) { observe(record.t, record.u); }

    void LevelLog::observe(Count t, std::span<const Count> u)
    {
        if (last_t_ && t <= *last_t_)
        {
            throw std::invalid_argument("level log records must arrive in increasing step order");
        }
        last_t_ = t;
        const Count m = *std::min_element(u.begin(), u.end());
        if (!levels_.empty() && m <= levels_.back().m)
        {
            return;
        }
        Level level;
        level.t = t;
        level.m = m;
        level.v.assign(u.begin(), u.end());
        for (auto& x : level.v)
        {
            x -= m;
        }
        level.S = stat_S(level.v);
        level.Q = stat_Q(level.v);
        level.W = stat_W(level.v);
        level.signature = pattern(level.v);
        levels_.push_back(std::move(level));
    }

    void LevelObserver::begin(const ChainState& initial, Count)
    {
        log_.observe(initial.t(), initial.u());
        level_min_ = initial.min_u();
    }

    void LevelObserver::on_step(const StepEvent& event)
    {
        if (event.min_after > level_min_)
        {
            level_min_ = event.min_after;
            log_.observe(event.state.t(), event.state.u());
        }
    }

    void InvariantCheck::fail(Count t)
    {
        passed = false;
        ++violations;
        if (!first_violation)
        {
            first_violation = t;
        }
    }

    nlohmann::ordered_json to_json(const InvariantCheck& check)
    {
        nlohmann::ordered_json j;
        j["id"] = check.id;
        j["hard"] = check.hard;
        j["passed"] = check.passed;
        j["violations"] = check.violations;
        j["first_violation_step"] = check.first_violation ? nlohmann::ordered_json(*check.first_violation) : nlohmann::ordered_json();
        j["early_violations"] = check.early_violations;
        j["detail"] = check.detail;
        return j;
    }

    InvariantCheck check_s_monotone(const LevelLog& log)
    {
        InvariantCheck check{"s-monotone", true, true, 0, {}, 0, "S(j+1) <= S(j)"};
        const auto& levels = log.levels();
        for (std::size_t j = 1; j < levels.size(); ++j)
        {
            if (levels[j].S > levels[j - 1].S)
            {
                check.fail(levels[j].t);
            }
        }
        return check;
    }

    std::vector<InvariantCheck> check_symmetric_levels(const LevelLog& log, double tail_fraction)
    {
        InvariantCheck q_mono{"q-nondecreasing", true, true, 0, {}, 0, "Q(j+1) >= Q(j)"};
        InvariantCheck w_mono{"w-nonincreasing", true, true, 0, {}, 0, "W(j+1) <= W(j)"};
        InvariantCheck persist{"flanked-zero-persistence", true, true, 0, {}, 0, "(*,0,*) persists once seen"};
        InvariantCheck three_pos{"no-three-positive", true, true, 0, {}, 0, "no run of >= 3 positives in the tail"};
        InvariantCheck three_zero{"no-three-zero", true, true, 0, {}, 0, "no run of >= 3 zeros in the tail"};
        InvariantCheck pair_zero{"no-double-zero-pair", true, true, 0, {}, 0, "no (*,*,0,0) or (0,0,*,*) in the tail"};
        InvariantCheck peak{"no-isolated-peak", true, true, 0, {}, 0, "no (0,0,*,0,0) in the tail"};

        const auto& levels = log.levels();
        const auto tail_from =
            static_cast<std::size_t>(std::floor(static_cast<double>(levels.size()) * (1.0 - tail_fraction)));
        std::vector<bool> held;
        for (std::size_t j = 0; j < levels.size(); ++j)
        {
            const auto& level = levels[j];
            const auto& s = level.signature.symbols;
            const int n = static_cast<int>(s.size());
            if (j > 0)
            {
                if (level.Q < levels[j - 1].Q)
                {
                    q_mono.fail(level.t);
                }
                if (level.W > levels[j - 1].W)
                {
                    w_mono.fail(level.t);
                }
            }
            held.resize(s.size(), false);
            for (int k = 0; k < n; ++k)
            {
                const bool flanked = flanked_zero(s, k);
                if (held[k] && !flanked)
                {
                    persist.fail(level.t);
                }
                held[k] = held[k] || flanked;
            }
            record(three_pos, !any_window(s, {PP, PP, PP}), j, tail_from, level.t);
            record(three_zero, !any_window(s, {P0, P0, P0}), j, tail_from, level.t);
            record(pair_zero, !any_window(s, {PP, PP, P0, P0}) && !any_window(s, {P0, P0, PP, PP}), j, tail_from, level.t);
            record(peak, !any_window(s, {P0, P0, PP, P0, P0}), j, tail_from, level.t);
        }
        return {q_mono, w_mono, persist, three_pos, three_zero, pair_zero, peak};
    }

    void AsymmetricBoundsMonitor::begin(const ChainState& initial, Count horizon)
    {
        if (initial.ring().kind() != Neighborhood::Asymmetric)
        {
            throw std::invalid_argument("asymmetric bounds need an asymmetric ring");
        }
        window_start_ = initial.t() + static_cast<Count>(std::ceil(static_cast<double>(horizon) * tail_start_));
        inspect(initial);
    }

    void AsymmetricBoundsMonitor::on_step(const StepEvent& event) { inspect(event.state); }

    void AsymmetricBoundsMonitor::inspect(const ChainState& state)
    {
        const auto xi = state.xi();
        const int n = state.size();
        const bool in_window = state.t() >= window_start_;

        bool gap_ok = true;
        for (int i = 0; i < n; ++i)
        {
            gap_ok = gap_ok && std::abs(xi[i] - xi[wrap(i + 2, n)]) <= 2;
        }

        // M * xi_i - total - (-1)^i * M * H, with M * H = even-site sum - odd-site sum.
        Count scaled_gap = 0;
        if (n % 2 == 0)
        {
            for (int k = 0; k < n; ++k)
            {
                scaled_gap += k % 2 == 1 ? xi[k] : -xi[k];
            }
        }
        const Count bound = 2 * static_cast<Count>(n) * n;
        bool residual_ok = true;
        for (int k = 0; k < n; ++k)
        {
            const Count sign = (k + 1) % 2 == 0 ? 1 : -1;
            const Count scaled = static_cast<Count>(n) * xi[k] - state.total() - sign * scaled_gap;
            residual_ok = residual_ok && std::abs(scaled) <= bound;
        }

        for (auto [check, ok] : {std::pair{&neighbour_gap_, gap_ok}, std::pair{&residual_, residual_ok}})
        {
            if (ok)
            {
                continue;
            }
            if (in_window)
            {
                check->fail(state.t());
            }
            else
            {
                ++check->early_violations;
            }
        }
    }

    void ParityMonitor::begin(const ChainState& initial, Count)
    {
        if (initial.ring().kind() != Neighborhood::Asymmetric || initial.size() % 2 != 0)
        {
            throw std::invalid_argument("parity monitor needs an asymmetric ring with an even number of sites");
        }
        inspect(initial);
    }

    void ParityMonitor::on_step(const StepEvent& event) { inspect(event.state); }

    void ParityMonitor::inspect(const ChainState& state)
    {
        const auto u = state.u();
        const Count m = state.min_u();
        scratch_.assign(u.begin(), u.end());
        for (auto& x : scratch_)
        {
            x -= m;
        }
        if (!parity_invariant(scratch_))
        {
            check_.fail(state.t());
        }
    }

    void Mod3Monitor::begin(const ChainState& initial, Count)
    {
        if (!mod3_invariant(initial.u()))
        {
            check_.fail(initial.t());
        }
    }

    void Mod3Monitor::on_step(const StepEvent& event)
    {
        if (!mod3_invariant(event.state.u()))
        {
            check_.fail(event.state.t());
        }
    }

    Rational parity_gap(std::span<const Count> xi)
    {
        if (xi.empty() || xi.size() % 2 != 0)
        {
            throw std::invalid_argument("parity gap is only defined for an even number of sites");
        }
        Count diff = 0;
        for (std::size_t k = 0; k < xi.size(); ++k)
        {
            diff += k % 2 == 1 ? xi[k] : -xi[k];
        }
        return Rational(diff, static_cast<std::int64_t>(xi.size()));
    }

    void RenewalTracker::begin(const ChainState& initial, Count) { inspect(initial); }

    void RenewalTracker::on_step(const StepEvent& event) { inspect(event.state); }

    void RenewalTracker::inspect(const ChainState& state)
    {
        const auto u = state.u();
        if (std::adjacent_find(u.begin(), u.end(), std::not_equal_to<>()) == u.end())
        {
            times_.push_back(state.t());
            on_renewal(state);
        }
    }

    void RenewalTracker::on_renewal(const ChainState&) {}

    ParityGapTracker::ParityGapTracker(std::set<Count> checkpoints) : checkpoints_(std::move(checkpoints)) {}

    void ParityGapTracker::begin(const ChainState& initial, Count horizon)
    {
        if (initial.ring().kind() != Neighborhood::Asymmetric || initial.size() % 2 != 0)
        {
            throw std::invalid_argument("parity gap needs an asymmetric ring with an even number of sites");
        }
        RenewalTracker::begin(initial, horizon);
        sample(initial);
    }

    void ParityGapTracker::on_step(const StepEvent& event)
    {
        RenewalTracker::on_step(event);
        sample(event.state);
    }

    void ParityGapTracker::sample(const ChainState& state)
    {
        if (checkpoints_.count(state.t()) != 0)
        {
            samples_.emplace_back(state.t(), parity_gap(state.xi()));
        }
    }

    void ParityGapTracker::on_renewal(const ChainState& state)
    {
        const Rational h = parity_gap(state.xi());
        if (last_renewal_)
        {
            const Rational zeta = h - last_renewal_->second;
            increments_.push_back(zeta);
            if (boost::abs(zeta) > Rational(state.t() - last_renewal_->first))
            {
                bound_.fail(state.t());
            }
        }
        last_renewal_ = std::pair{state.t(), h};
    }

    std::string_view to_string(ConvergenceVerdict::Mode mode) noexcept
    {
        switch (mode)
        {
        case ConvergenceVerdict::Mode::Symmetric:
            return "symmetric";
        case ConvergenceVerdict::Mode::Flat:
            return "flat";
        case ConvergenceVerdict::Mode::Comb:
            return "comb";
        }
        return "unknown";
    }

    std::optional<ConvergenceVerdict> detect_convergence(const LevelLog& log, std::span<const Count> xi, Neighborhood kind,
                                                         std::span<const LimitConfiguration> limits, int window, double epsilon)
    {
        if (window < 1)
        {
            throw std::invalid_argument("stability window must be positive");
        }
        const auto& levels = log.levels();
        if (levels.size() < static_cast<std::size_t>(window))
        {
            return std::nullopt;
        }
        ConvergenceVerdict verdict;
        verdict.stable_pattern = levels.back().signature;
        std::size_t since = levels.size() - 1;
        while (since > 0 && levels[since - 1].signature == verdict.stable_pattern)
        {
            --since;
        }
        verdict.stable_since_level = since;
        verdict.pattern_stable = levels.size() - since >= static_cast<std::size_t>(window);

        Count total = 0;
        for (Count x : xi)
        {
            total += x;
        }
        for (Count x : xi)
        {
            verdict.fractions.push_back(total > 0 ? static_cast<double>(x) / static_cast<double>(total) : 0.0);
        }

        if (kind == Neighborhood::Asymmetric)
        {
            verdict.mode = xi.size() % 2 == 0 ? ConvergenceVerdict::Mode::Comb : ConvergenceVerdict::Mode::Flat;
            return verdict;
        }
        if (!verdict.pattern_stable)
        {
            return std::nullopt;
        }
        verdict.mode = ConvergenceVerdict::Mode::Symmetric;
        double best = INFINITY;
        for (std::size_t c = 0; c < limits.size(); ++c)
        {
            if (limits[c].x.size() != xi.size())
            {
                continue;
            }
            double dist = 0.0;
            for (std::size_t i = 0; i < xi.size(); ++i)
            {
                dist = std::max(dist, std::abs(verdict.fractions[i] - to_double(limits[c].x[i])));
            }
            if (dist < best)
            {
                best = dist;
                verdict.closest = c;
            }
        }
        verdict.distance = best;
        if (verdict.closest && best <= epsilon)
        {
            verdict.matched = verdict.closest;
        }
        return verdict;
    }

    nlohmann::ordered_json to_json(const ConvergenceVerdict& verdict, std::span<const LimitConfiguration> limits)
    {
        nlohmann::ordered_json j;
        j["mode"] = std::string(to_string(verdict.mode));
        j["pattern_stable"] = verdict.pattern_stable;
        j["pattern"] = verdict.stable_pattern.str();
        j["stable_since_level"] = verdict.stable_since_level;
        j["fractions"] = verdict.fractions;
        if (verdict.matched && *verdict.matched < limits.size())
        {
            const auto& c = limits[*verdict.matched];
            nlohmann::ordered_json m;
            auto xs = nlohmann::ordered_json::array();
            for (const auto& x : c.x)
            {
                xs.push_back(to_string(x));
            }
            m["x"] = std::move(xs);
            m["alpha"] = to_string(c.alpha);
            m["achievable_from_empty"] = c.achievable_from_empty;
            j["matched"] = std::move(m);
        }
        else
        {
            j["matched"] = nullptr;
        }
        if (verdict.mode == ConvergenceVerdict::Mode::Symmetric)
        {
            j["distance"] = verdict.distance;
        }
        return j;
    }
} // namespace nq
