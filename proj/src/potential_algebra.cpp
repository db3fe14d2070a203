#include "nq/potential_algebra.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace nq
{
    std::string_view to_string(SolvabilityCondition c) noexcept
    {
        return c == SolvabilityCondition::AlternatingSums ? "alternating-sums" : "residue-class-sums";
    }

    namespace
    {
        int wrap(int i, int n) { return ((i % n) + n) % n; }

        void require_sites(std::span<const Rational> u, int minimum, const char* what)
        {
            if (static_cast<int>(u.size()) < minimum)
            {
                throw std::invalid_argument(std::string(what) + " needs at least " + std::to_string(minimum) + " sites");
            }
        }

        // xi_{k+1} = u_k - xi_k, starting from xi_0.
        RationalVector forward_asym(std::span<const Rational> u, Rational first)
        {
            const auto n = u.size();
            RationalVector xi(n);
            xi[0] = first;
            for (std::size_t k = 1; k < n; ++k)
            {
                xi[k] = u[k - 1] - xi[k - 1];
            }
            return xi;
        }

        void check_solution(std::span<const Rational> u, const RationalVector& xi, Neighborhood kind)
        {
            const auto back = apply_windows(xi, kind);
            if (!std::equal(back.begin(), back.end(), u.begin(), u.end()))
            {
                throw std::logic_error("occupancy solve does not reproduce the potentials");
            }
        }
    } // namespace

    RationalVector apply_windows(std::span<const Rational> xi, Neighborhood kind)
    {
        const int n = static_cast<int>(xi.size());
        RationalVector u(xi.size());
        for (int i = 0; i < n; ++i)
        {
            u[i] = xi[i] + xi[wrap(i + 1, n)];
            if (kind == Neighborhood::Symmetric)
            {
                u[i] += xi[wrap(i - 1, n)];
            }
        }
        return u;
    }

    SolveOutcome solve_occupancy_asym(std::span<const Rational> u)
    {
        require_sites(u, 3, "asymmetric solve");
        const auto n = u.size();
        Rational alternating = 0;
        for (std::size_t k = 0; k < n; ++k)
        {
            alternating += k % 2 == 0 ? u[k] : -u[k];
        }
        if (n % 2 == 1)
        {
            // xi_1 = (u_1 - u_2 + ... + u_M) / 2
            auto xi = forward_asym(u, alternating / 2);
            check_solution(u, xi, Neighborhood::Asymmetric);
            return Unique{std::move(xi)};
        }
        if (alternating != Rational(0))
        {
            return Infeasible{SolvabilityCondition::AlternatingSums};
        }
        auto base = forward_asym(u, Rational(0));
        check_solution(u, base, Neighborhood::Asymmetric);
        return Family{std::move(base), 1, Neighborhood::Asymmetric};
    }

    SolveOutcome solve_occupancy_sym(std::span<const Rational> u)
    {
        require_sites(u, 4, "symmetric solve");
        const int n = static_cast<int>(u.size());
        if (n % 3 != 0)
        {
            // u_{k+1} - u_k = xi_{k+2} - xi_{k-1}; stepping by 3 visits every site
            // when 3 does not divide n, so xi = a + d with d fixed by the walk.
            RationalVector d(u.size());
            int j = 0;
            for (int s = 1; s < n; ++s)
            {
                const int next = wrap(j + 3, n);
                d[next] = d[j] + u[wrap(j + 2, n)] - u[wrap(j + 1, n)];
                j = next;
            }
            const Rational a = (u[0] - d[n - 1] - d[0] - d[1]) / 3;
            RationalVector xi(u.size());
            for (int i = 0; i < n; ++i)
            {
                xi[i] = a + d[i];
            }
            check_solution(u, xi, Neighborhood::Symmetric);
            return Unique{std::move(xi)};
        }

        std::array<Rational, 3> classes{};
        for (int k = 0; k < n; ++k)
        {
            classes[k % 3] += u[k];
        }
        if (classes[0] != classes[1] || classes[1] != classes[2])
        {
            return Infeasible{SolvabilityCondition::ResidueClassSums};
        }
        RationalVector base(u.size());
        // xi_1 = xi_2 = 0, then xi_{k+1} = u_k - xi_{k-1} - xi_k.
        for (int k = 1; k + 1 < n; ++k)
        {
            base[k + 1] = u[k] - base[k - 1] - base[k];
        }
        check_solution(u, base, Neighborhood::Symmetric);
        return Family{std::move(base), 2, Neighborhood::Symmetric};
    }

    SolveOutcome solve_occupancy(std::span<const Rational> u, Neighborhood kind)
    {
        return kind == Neighborhood::Asymmetric ? solve_occupancy_asym(u) : solve_occupancy_sym(u);
    }

    SolveOutcome solve_occupancy(const Potential& u, Neighborhood kind)
    {
        RationalVector r;
        r.reserve(static_cast<std::size_t>(u.size()));
        for (Count x : u.values())
        {
            r.emplace_back(x);
        }
        return solve_occupancy(r, kind);
    }

    RationalVector family_member(const Family& family, std::span<const Rational> params)
    {
        if (static_cast<int>(params.size()) != family.free_parameters)
        {
            throw std::invalid_argument("family_member: wrong number of parameters");
        }
        RationalVector xi = family.base;
        for (std::size_t i = 0; i < xi.size(); ++i)
        {
            if (family.kind == Neighborhood::Asymmetric)
            {
                xi[i] += i % 2 == 0 ? params[0] : -params[0];
            }
            else
            {
                const std::array<Rational, 3> kernel{params[0], params[1], -params[0] - params[1]};
                xi[i] += kernel[i % 3];
            }
        }
        return xi;
    }

    bool parity_invariant(std::span<const Count> v)
    {
        if (v.size() % 2 != 0)
        {
            throw std::invalid_argument("parity invariant is only defined for an even number of sites");
        }
        Count odd = 0;
        Count even = 0;
        for (std::size_t k = 0; k < v.size(); ++k)
        {
            // 0-based even index is a 1-based odd site.
            (k % 2 == 0 ? odd : even) += v[k];
        }
        return odd == even;
    }

    bool mod3_invariant(std::span<const Count> u)
    {
        if (u.empty() || u.size() % 3 != 0)
        {
            throw std::invalid_argument("mod-3 invariant is only defined when the number of sites is divisible by 3");
        }
        std::array<Count, 3> classes{};
        for (std::size_t k = 0; k < u.size(); ++k)
        {
            classes[k % 3] += u[k];
        }
        return classes[0] == classes[1] && classes[1] == classes[2];
    }
} // namespace nq
