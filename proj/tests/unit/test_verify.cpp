#include "nq/verify.hpp"

#include <doctest.h>

using namespace nq;

namespace
{
    bool has_check(const nlohmann::ordered_json& report, const std::string& id)
    {
        for (const auto& c : report["checks"])
        {
            if (c["id"] == id)
            {
                return true;
            }
        }
        return false;
    }

    void require_all_hard_pass(const VerifyReport& r)
    {
        for (const auto& c : r.json["checks"])
        {
            if (c["hard"].get<bool>())
            {
                CHECK_MESSAGE(c["passed"].get<bool>(), c.dump());
            }
        }
        CHECK(r.passed);
        CHECK(r.json["passed"] == r.passed);
    }
} // namespace

TEST_CASE("suite names")
{
    for (auto s : {Suite::AsymOdd, Suite::AsymEven, Suite::Symmetric, Suite::Appendix, Suite::Algebra})
    {
        CHECK(parse_suite(to_string(s)) == s);
    }
    CHECK(parse_suite("sym") == Suite::Symmetric);
    CHECK_THROWS_AS(parse_suite("nope"), std::invalid_argument);
}

TEST_CASE("asymmetric suites")
{
    const auto odd = run_suite({.suite = Suite::AsymOdd, .sites = 5, .steps = 20000, .replicas = 6, .seed = 1});
    require_all_hard_pass(odd);
    CHECK(has_check(odd.json, "asym-flat-fractions"));
    CHECK(has_check(odd.json, "s-monotone"));
    CHECK(odd.json["max_fraction_deviation"].get<double>() < 1e-2);

    const auto even = run_suite({.suite = Suite::AsymEven, .sites = 6, .steps = 20000, .replicas = 6, .seed = 1});
    require_all_hard_pass(even);
    CHECK(has_check(even.json, "parity-invariant"));
    CHECK(has_check(even.json, "renewal-recurrence"));
    CHECK(even.json["min_renewals"].get<int>() >= 10);

    CHECK_THROWS_AS(run_suite({.suite = Suite::AsymOdd, .sites = 6, .steps = 10, .replicas = 1}), std::invalid_argument);
    CHECK_THROWS_AS(run_suite({.suite = Suite::AsymEven, .sites = 5, .steps = 10, .replicas = 1}), std::invalid_argument);
}

TEST_CASE("symmetric suite")
{
    const auto five = run_suite({.suite = Suite::Symmetric, .sites = 5, .steps = 50000, .replicas = 8, .seed = 2});
    require_all_hard_pass(five);
    CHECK(five.json["converged_replicas"] == 8);
    for (const auto& m : five.json["matched_limits"])
    {
        CHECK(m["achievable_from_empty"] == true);
    }

    const auto six = run_suite({.suite = Suite::Symmetric, .sites = 6, .steps = 30000, .replicas = 4, .seed = 2});
    require_all_hard_pass(six);
    CHECK(has_check(six.json, "mod3-invariant"));
}

TEST_CASE("max-rule suite")
{
    const auto sym = run_suite({.suite = Suite::Appendix, .sites = 6, .kind = Neighborhood::Symmetric, .steps = 5000,
                                .replicas = 40, .seed = 4});
    require_all_hard_pass(sym);
    CHECK(sym.json["outcomes"]["unfrozen"] == 0);

    const auto asym = run_suite({.suite = Suite::Appendix, .sites = 5, .kind = Neighborhood::Asymmetric, .steps = 5000,
                                 .replicas = 20, .seed = 4});
    require_all_hard_pass(asym);
    CHECK(asym.json["outcomes"]["single-site"] == 20);
}

TEST_CASE("algebra suite")
{
    for (auto kind : {Neighborhood::Asymmetric, Neighborhood::Symmetric})
    {
        for (int n : {6, 7})
        {
            CAPTURE(n);
            const auto r = run_suite({.suite = Suite::Algebra, .sites = n, .kind = kind, .seed = 9, .algebra_samples = 200});
            require_all_hard_pass(r);
        }
    }
}

TEST_CASE("reports are reproducible and independent of worker count")
{
    VerifyConfig c{.suite = Suite::AsymEven, .sites = 4, .steps = 5000, .replicas = 5, .seed = 12, .jobs = 1};
    const auto a = run_suite(c);
    c.jobs = 3;
    const auto b = run_suite(c);
    auto strip = [](nlohmann::ordered_json j) {
        j["config"].erase("jobs");
        return j.dump();
    };
    CHECK(strip(a.json) == strip(b.json));
}
