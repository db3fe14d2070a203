#include "nq/dynamics.hpp"
#include "nq/limit_enum.hpp"
#include "nq/observers.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>

using namespace nq;

namespace
{
    std::vector<Count> uv(std::initializer_list<Count> xs) { return xs; }

    bool is_rotation_of(const RationalVector& a, const RationalVector& b)
    {
        for (std::size_t s = 0; s < b.size(); ++s)
        {
            RationalVector r(b.begin() + static_cast<std::ptrdiff_t>(s), b.end());
            r.insert(r.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(s));
            if (r == a)
            {
                return true;
            }
        }
        return false;
    }

    RationalVector fracs(std::initializer_list<std::pair<int, int>> xs)
    {
        RationalVector out;
        for (auto [p, q] : xs)
        {
            out.emplace_back(p, q);
        }
        return out;
    }
} // namespace

TEST_CASE("statistics on level snapshots")
{
    CHECK(stat_S(uv({3, 0, 1, 2, 0})) == 5);
    CHECK(stat_S(uv({0, 1, 0, 1})) == 0);
    CHECK(stat_S(uv({2, 2, 2})) == 6);

    CHECK(stat_Q(uv({1, 0, 1, 0})) == 2);
    CHECK(stat_Q(uv({0, 0, 0, 0})) == 0);
    CHECK(stat_Q(uv({2, 0, 0, 1})) == 0);

    CHECK(stat_W(uv({0, 1, 2, 0, 3, 0})) == 1);
    CHECK(stat_W(uv({0, 1, 0, 1, 0, 1})) == 0);
    CHECK(stat_W(uv({0, 1, 1, 0, 2, 2})) == 2);

    CHECK(pattern(uv({0, 2, 0, 0, 1})).str() == "0*00*");
    CHECK(pattern(uv({0, 0, 0})).str() == "000");
}

TEST_CASE("levels open on strict increases of the minimum")
{
    LevelLog log;
    // m: 0, 0, 0, 1, 1, 2
    const std::vector<std::vector<Count>> us{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {2, 1, 1}, {2, 2, 2}};
    for (std::size_t t = 0; t < us.size(); ++t)
    {
        log.observe(static_cast<Count>(t), us[t]);
    }
    REQUIRE(log.size() == 3);
    CHECK(log.levels()[0].t == 0);
    CHECK(log.levels()[0].m == 0);
    CHECK(log.levels()[1].t == 3);
    CHECK(log.levels()[2].t == 5);
    CHECK(log.levels()[2].m == 2);
    CHECK_THROWS_AS(log.observe(5, us[5]), std::invalid_argument);
}

TEST_CASE("exhaustive asymmetric M = 3: every min-rule path reaches m = 1 by step 3")
{
    const Ring ring(3, Neighborhood::Asymmetric);
    int feasible = 0;
    for (int code = 0; code < 27; ++code)
    {
        auto state = ChainState::empty(ring);
        LevelObserver levels;
        levels.begin(state, 3);
        bool ok = true;
        int c = code;
        for (int s = 0; s < 3 && ok; ++s)
        {
            const int site = c % 3;
            c /= 3;
            if (state.u()[site] != state.min_u())
            {
                ok = false; // min rule never picks this site
                break;
            }
            const Count min_before = state.min_u();
            const Count max_before = state.max_u();
            const Count before = state.u()[site];
            state.allocate(site);
            levels.on_step({state, site, min_before, max_before, before, state.min_u()});
        }
        if (!ok)
        {
            continue;
        }
        ++feasible;
        REQUIRE(levels.log().size() >= 2);
        CHECK(levels.log().levels()[0].t == 0);
        CHECK(levels.log().levels()[1].t <= 3);
    }
    CHECK(feasible > 0);
}

TEST_CASE("parity gap")
{
    CHECK(parity_gap(uv({1, 2, 3, 4})) == Rational(1, 2));
    CHECK(parity_gap(uv({5, 9, 5, 9})) == Rational(2));
    CHECK_THROWS_AS(parity_gap(uv({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("renewals and zeta increments")
{
    RandomStream rng(12, 0);
    ParityGapTracker tracker({100, 1000});
    Observer* obs[] = {&tracker};
    run(ChainState::empty(Ring(4, Neighborhood::Asymmetric)), AllocationRule::min_rule(), rng, obs,
        RunOptions{.steps = 1000});
    REQUIRE(!tracker.renewal_times().empty());
    CHECK(tracker.renewal_times().front() == 0);
    CHECK(tracker.increments().size() + 1 == tracker.renewal_times().size());
    CHECK(tracker.increment_bound().passed);
    REQUIRE(tracker.samples().size() == 2);
    CHECK(tracker.samples()[0].first == 100);
    CHECK(std::is_sorted(tracker.renewal_times().begin(), tracker.renewal_times().end()));
}

TEST_CASE("asymmetric monitors on real runs")
{
    for (int n : {5, 6})
    {
        RandomStream rng(31, static_cast<std::uint64_t>(n));
        LevelObserver levels;
        AsymmetricBoundsMonitor bounds(0.5);
        Observer* obs[] = {&levels, &bounds};
        run(ChainState::empty(Ring(n, Neighborhood::Asymmetric)), AllocationRule::min_rule(), rng, obs,
            RunOptions{.steps = 30000});
        CHECK(check_s_monotone(levels.log()).passed);
        for (const auto& c : bounds.checks())
        {
            CHECK_MESSAGE(c.passed, c.id);
        }
    }
}

TEST_CASE("asymmetric bound monitor flags a lopsided state")
{
    AsymmetricBoundsMonitor bounds(0.0);
    bounds.begin(ChainState(Ring(5, Neighborhood::Asymmetric), Occupancy({40, 0, 0, 0, 0})), 10);
    const auto checks = bounds.checks();
    CHECK_FALSE(checks[0].passed);
    CHECK(checks[0].first_violation == 0);
    CHECK_FALSE(checks[1].passed);

    AsymmetricBoundsMonitor late(0.5);
    late.begin(ChainState(Ring(5, Neighborhood::Asymmetric), Occupancy({40, 0, 0, 0, 0})), 10);
    CHECK(late.checks()[0].passed);
    CHECK(late.checks()[0].early_violations == 1);
}

TEST_CASE("symmetric battery catches each excluded shape")
{
    auto run_log = [](std::vector<std::vector<Count>> vs) {
        LevelLog log;
        Count t = 0;
        Count m = 0;
        for (auto v : vs)
        {
            for (auto& x : v)
            {
                x += m;
            }
            log.observe(t, v);
            t += 10;
            ++m;
        }
        std::map<std::string, bool> passed;
        for (const auto& c : check_symmetric_levels(log, 1.0))
        {
            passed[c.id] = c.passed;
        }
        return passed;
    };

    auto ok = run_log({{0, 1, 0, 1, 2, 0}, {0, 1, 0, 1, 2, 0}});
    CHECK(ok["no-three-positive"]);
    CHECK(ok["no-three-zero"]);

    CHECK_FALSE(run_log({{0, 1, 1, 1, 0, 0, 2}})["no-three-positive"]);
    CHECK_FALSE(run_log({{0, 0, 0, 1, 0, 2, 1}})["no-three-zero"]);
    CHECK_FALSE(run_log({{1, 1, 0, 0, 1, 0, 2}})["no-double-zero-pair"]);
    CHECK_FALSE(run_log({{0, 0, 1, 0, 0, 1, 1}})["no-isolated-peak"]);
    CHECK_FALSE(run_log({{1, 0, 1, 0, 1, 0}, {1, 0, 0, 1, 1, 0}})["q-nondecreasing"]);
    CHECK_FALSE(run_log({{1, 0, 1, 0, 1, 0}, {1, 0, 0, 1, 1, 0}})["flanked-zero-persistence"]);
    CHECK_FALSE(run_log({{0, 1, 0, 1, 0, 1}, {0, 1, 1, 0, 1, 0}})["w-nonincreasing"]);
}

TEST_CASE("symmetric battery passes on simulated runs")
{
    for (int n : {5, 7, 8})
    {
        RandomStream rng(77, static_cast<std::uint64_t>(n));
        LevelObserver levels;
        Observer* obs[] = {&levels};
        run(ChainState::empty(Ring(n, Neighborhood::Symmetric)), AllocationRule::min_rule(), rng, obs,
            RunOptions{.steps = 40000});
        for (const auto& c : check_symmetric_levels(levels.log()))
        {
            CHECK_MESSAGE(c.passed, c.id << " M=" << n);
        }
    }
}

TEST_CASE("convergence verdicts")
{
    SUBCASE("symmetric M = 4 settles on a rotation of (1/2, 0, 1/2, 0)")
    {
        const auto limits = enumerate_limits(4);
        RandomStream rng(5, 0);
        LevelObserver levels;
        Observer* obs[] = {&levels};
        const auto r = run(ChainState::empty(Ring(4, Neighborhood::Symmetric)), AllocationRule::min_rule(), rng, obs,
                           RunOptions{.steps = 100000});
        const auto v = detect_convergence(levels.log(), r.final_state.xi(), Neighborhood::Symmetric, limits);
        REQUIRE(v);
        REQUIRE(v->matched);
        CHECK(is_rotation_of(limits[*v->matched].x, fracs({{1, 2}, {0, 1}, {1, 2}, {0, 1}})));
    }
    SUBCASE("symmetric M = 5 settles on a rotation of (1/4, 1/4, 0, 1/2, 0)")
    {
        const auto limits = enumerate_limits(5);
        RandomStream rng(5, 1);
        LevelObserver levels;
        Observer* obs[] = {&levels};
        const auto r = run(ChainState::empty(Ring(5, Neighborhood::Symmetric)), AllocationRule::min_rule(), rng, obs,
                           RunOptions{.steps = 100000});
        const auto v = detect_convergence(levels.log(), r.final_state.xi(), Neighborhood::Symmetric, limits);
        REQUIRE(v);
        REQUIRE(v->matched);
        CHECK(is_rotation_of(limits[*v->matched].x, fracs({{1, 4}, {1, 4}, {0, 1}, {1, 2}, {0, 1}})));
        const auto j = to_json(*v, limits);
        CHECK(j["mode"] == "symmetric");
        CHECK(j["matched"]["achievable_from_empty"] == true);
    }
    SUBCASE("asymmetric runs report flat or comb")
    {
        for (int n : {5, 6})
        {
            RandomStream rng(5, 2);
            LevelObserver levels;
            Observer* obs[] = {&levels};
            const auto r = run(ChainState::empty(Ring(n, Neighborhood::Asymmetric)), AllocationRule::min_rule(), rng,
                               obs, RunOptions{.steps = 5000});
            const auto v = detect_convergence(levels.log(), r.final_state.xi(), Neighborhood::Asymmetric, {});
            REQUIRE(v);
            CHECK(v->mode == (n % 2 == 0 ? ConvergenceVerdict::Mode::Comb : ConvergenceVerdict::Mode::Flat));
            CHECK(!v->matched);
        }
    }
    SUBCASE("too few levels is pending")
    {
        LevelLog log;
        log.observe(0, uv({0, 0, 0, 0}));
        CHECK(!detect_convergence(log, uv({0, 0, 0, 0}), Neighborhood::Symmetric, {}));
    }
}
