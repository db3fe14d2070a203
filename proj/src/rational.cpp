#include "nq/rational.hpp"

#include <charconv>
#include <stdexcept>

namespace nq
{
    std::string to_string(const Rational& r)
    {
        return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
    }

    namespace
    {
        std::int64_t parse_int(std::string_view text)
        {
            std::int64_t value = 0;
            const auto* end = text.data() + text.size();
            const auto res = std::from_chars(text.data(), end, value);
            if (res.ec != std::errc{} || res.ptr != end)
            {
                throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
            }
            return value;
        }
    } // namespace

    Rational parse_rational(std::string_view text)
    {
        const auto slash = text.find('/');
        if (slash == std::string_view::npos)
        {
            return Rational(parse_int(text));
        }
        const auto den = parse_int(text.substr(slash + 1));
        if (den == 0)
        {
            throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        }
        return Rational(parse_int(text.substr(0, slash)), den);
    }

    double to_double(const Rational& r) noexcept
    {
        return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
    }

    std::vector<double> to_doubles(std::span<const Rational> xs)
    {
        std::vector<double> out;
        out.reserve(xs.size());
        for (const auto& x : xs)
        {
            out.push_back(to_double(x));
        }
        return out;
    }
} // namespace nq
