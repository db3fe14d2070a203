#include "nq/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace nq;

TEST_CASE("philox known-answer vectors")
{
    using Block = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct")
{
    RandomStream a(42, 3);
    RandomStream b(42, 3);
    RandomStream c(42, 4);
    RandomStream d(43, 3);
    int same_c = 0;
    int same_d = 0;
    for (int i = 0; i < 1000; ++i)
    {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        same_c += x == c.next_u64() ? 1 : 0;
        same_d += x == d.next_u64() ? 1 : 0;
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(a.blocks_used() == 500);
    CHECK(RandomStream::algorithm == "philox4x32-10/v1");
}

TEST_CASE("uniform draws look uniform")
{
    RandomStream rng(7, 0);
    constexpr int n = 200000;
    std::vector<int> bins(10, 0);
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        ++bins[static_cast<std::size_t>(u * 10)];
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    double chi2 = 0.0;
    for (int b : bins)
    {
        chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
    }
    CHECK(chi2 < 27.9); // chi-square, 9 dof, p = 0.001
}
