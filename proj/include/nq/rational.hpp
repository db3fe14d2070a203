#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nq
{
    using Rational = boost::rational<std::int64_t>;
    using RationalVector = std::vector<Rational>;

    // Always "p/q", including "0/1" and "3/1".
    std::string to_string(const Rational& r);
    Rational parse_rational(std::string_view text);

    double to_double(const Rational& r) noexcept;
    std::vector<double> to_doubles(std::span<const Rational> xs);
} // namespace nq
