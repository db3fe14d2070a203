#include "nq/ring.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nq
{
    std::string_view to_string(Neighborhood kind) noexcept
    {
        return kind == Neighborhood::Asymmetric ? "asym" : "sym";
    }

    Neighborhood parse_neighborhood(std::string_view text)
    {
        if (text == "asym" || text == "asymmetric")
        {
            return Neighborhood::Asymmetric;
        }
        if (text == "sym" || text == "symmetric")
        {
            return Neighborhood::Symmetric;
        }
        throw std::invalid_argument("unknown neighborhood '" + std::string(text) + "' (expected asym or sym)");
    }

    Ring::Ring(int sites, Neighborhood kind) : sites_(sites), kind_(kind)
    {
        if (sites < minimum_sites(kind))
        {
            throw std::invalid_argument(std::string(to_string(kind)) + " ring needs at least " +
                                        std::to_string(minimum_sites(kind)) + " sites, got " + std::to_string(sites));
        }
    }

    Count checked_add(Count a, Count b)
    {
        Count out = 0;
        if (__builtin_add_overflow(a, b, &out))
        {
            throw std::overflow_error("64-bit count overflow");
        }
        return out;
    }

    Occupancy::Occupancy(std::vector<Count> counts) : counts_(std::move(counts))
    {
        for (Count c : counts_)
        {
            if (c < 0)
            {
                throw std::invalid_argument("occupancy counts must be non-negative");
            }
            total_ = checked_add(total_, c);
        }
    }

    Potential::Potential(std::vector<Count> values) : values_(std::move(values))
    {
        if (std::any_of(values_.begin(), values_.end(), [](Count c) { return c < 0; }))
        {
            throw std::invalid_argument("potentials must be non-negative");
        }
    }

    ReducedPotential::ReducedPotential(std::vector<Count> excess) : excess_(std::move(excess))
    {
        if (excess_.empty() || *std::min_element(excess_.begin(), excess_.end()) != 0)
        {
            throw std::invalid_argument("reduced potential must be non-empty with minimum exactly 0");
        }
    }

    std::vector<int> neighborhood(const Ring& ring, int site)
    {
        if (site < 0 || site >= ring.size())
        {
            throw std::out_of_range("site index outside the ring");
        }
        if (ring.kind() == Neighborhood::Asymmetric)
        {
            return {site, ring.wrap(site + 1)};
        }
        return {ring.wrap(site - 1), site, ring.wrap(site + 1)};
    }

    std::vector<int> windows_containing(const Ring& ring, int site)
    {
        if (ring.kind() == Neighborhood::Asymmetric)
        {
            return {ring.wrap(site - 1), site};
        }
        return {ring.wrap(site - 1), site, ring.wrap(site + 1)};
    }

    void potentials_into(std::span<const Count> xi, const Ring& ring, std::span<Count> out)
    {
        const int n = ring.size();
        if (static_cast<int>(xi.size()) != n || static_cast<int>(out.size()) != n)
        {
            throw std::invalid_argument("occupancy length does not match ring size");
        }
        for (int i = 0; i < n; ++i)
        {
            Count sum = checked_add(xi[i], xi[ring.wrap(i + 1)]);
            if (ring.kind() == Neighborhood::Symmetric)
            {
                sum = checked_add(sum, xi[ring.wrap(i - 1)]);
            }
            out[i] = sum;
        }
    }

    Potential potentials(const Occupancy& xi, const Ring& ring)
    {
        std::vector<Count> u(static_cast<std::size_t>(ring.size()));
        potentials_into(xi.counts(), ring, u);
        return Potential(std::move(u));
    }

    MinPotential min_potential(std::span<const Count> u)
    {
        if (u.empty())
        {
            throw std::invalid_argument("min_potential of an empty vector");
        }
        MinPotential out;
        out.value = *std::min_element(u.begin(), u.end());
        for (std::size_t i = 0; i < u.size(); ++i)
        {
            if (u[i] == out.value)
            {
                out.argmin.push_back(static_cast<int>(i));
            }
        }
        return out;
    }

    ReducedPotential reduce(std::span<const Count> u)
    {
        if (u.empty())
        {
            throw std::invalid_argument("reduce of an empty vector");
        }
        const Count m = *std::min_element(u.begin(), u.end());
        std::vector<Count> v(u.begin(), u.end());
        for (auto& x : v)
        {
            x -= m;
        }
        return ReducedPotential(std::move(v));
    }
} // namespace nq
