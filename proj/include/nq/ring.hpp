#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace nq
{
    using Count = std::int64_t;

    enum class Neighborhood : std::uint8_t
    {
        // U_i = {i, i+1}
        Asymmetric,
        // U_i = {i-1, i, i+1}
        Symmetric,
    };

    std::string_view to_string(Neighborhood kind) noexcept;

    // Accepts "asym"/"asymmetric" and "sym"/"symmetric".
    Neighborhood parse_neighborhood(std::string_view text);

    /// Number of sites on the cycle together with the neighbourhood shape.
    ///
    /// Asymmetric rings need at least 3 sites and symmetric rings at least 4, so
    /// a window never lists the same site twice.
    class Ring
    {
    public:
        Ring(int sites, Neighborhood kind);

        int size() const noexcept { return sites_; }
        Neighborhood kind() const noexcept { return kind_; }
        int window_size() const noexcept { return kind_ == Neighborhood::Asymmetric ? 2 : 3; }

        // 0-based index arithmetic modulo the ring size.
        int wrap(int i) const noexcept
        {
            const int r = i % sites_;
            return r < 0 ? r + sites_ : r;
        }

        static int minimum_sites(Neighborhood kind) noexcept
        {
            return kind == Neighborhood::Asymmetric ? 3 : 4;
        }

        friend bool operator==(const Ring&, const Ring&) = default;

    private:
        int sites_;
        Neighborhood kind_;
    };

    /// Particle counts per site. The library uses 0-based sites; JSON and CLI
    /// output is 1-based.
    class Occupancy
    {
    public:
        explicit Occupancy(std::vector<Count> counts);

        static Occupancy empty(int sites) { return Occupancy(std::vector<Count>(static_cast<std::size_t>(sites), 0)); }

        std::span<const Count> counts() const noexcept { return counts_; }
        Count operator[](int site) const { return counts_.at(static_cast<std::size_t>(site)); }
        Count total() const noexcept { return total_; }
        int size() const noexcept { return static_cast<int>(counts_.size()); }

        friend bool operator==(const Occupancy&, const Occupancy&) = default;

    private:
        std::vector<Count> counts_;
        Count total_ = 0;
    };

    class Potential
    {
    public:
        explicit Potential(std::vector<Count> values);

        std::span<const Count> values() const noexcept { return values_; }
        Count operator[](int site) const { return values_.at(static_cast<std::size_t>(site)); }
        int size() const noexcept { return static_cast<int>(values_.size()); }

        friend bool operator==(const Potential&, const Potential&) = default;

    private:
        std::vector<Count> values_;
    };

    /// Excess of each potential over the ring minimum; always contains a zero.
    class ReducedPotential
    {
    public:
        explicit ReducedPotential(std::vector<Count> excess);

        std::span<const Count> excess() const noexcept { return excess_; }
        Count operator[](int site) const { return excess_.at(static_cast<std::size_t>(site)); }
        int size() const noexcept { return static_cast<int>(excess_.size()); }

        friend bool operator==(const ReducedPotential&, const ReducedPotential&) = default;

    private:
        std::vector<Count> excess_;
    };

    struct MinPotential
    {
        Count value = 0;
        std::vector<int> argmin; // ascending site order
        int count() const noexcept { return static_cast<int>(argmin.size()); }
    };

    // U_i in the order {i, i+1} or {i-1, i, i+1}, 0-based.
    std::vector<int> neighborhood(const Ring& ring, int site);

    // Windows i with site ∈ U_i. These are the potentials that move when a
    // particle lands on site.
    std::vector<int> windows_containing(const Ring& ring, int site);

    Potential potentials(const Occupancy& xi, const Ring& ring);
    void potentials_into(std::span<const Count> xi, const Ring& ring, std::span<Count> out);

    MinPotential min_potential(std::span<const Count> u);
    inline MinPotential min_potential(const Potential& u) { return min_potential(u.values()); }

    ReducedPotential reduce(std::span<const Count> u);
    inline ReducedPotential reduce(const Potential& u) { return reduce(u.values()); }

    // Throws std::overflow_error instead of wrapping.
    Count checked_add(Count a, Count b);
} // namespace nq
