#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nq
{
    /// Philox4x32-10 block function (Salmon et al., Random123).
    std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) noexcept;

    /// Counter-based random stream.
    ///
    /// The 64-bit seed is the Philox key, the stream id occupies the high half of
    /// the counter and the draw index the low half, so (seed, stream) fully
    /// determines the sequence on every platform. Replica r of an ensemble uses
    /// stream r.
    class RandomStream
    {
    public:
        static constexpr std::string_view algorithm = "philox4x32-10/v1";

        RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

        std::uint64_t seed() const noexcept { return seed_; }
        std::uint64_t stream() const noexcept { return stream_; }
        std::uint64_t blocks_used() const noexcept { return block_; }

        std::uint64_t next_u64() noexcept;

        // Uniform on [0, 1) with 53 random bits.
        double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    private:
        void refill() noexcept;

        std::uint64_t seed_;
        std::uint64_t stream_;
        std::uint64_t block_ = 0;
        std::array<std::uint64_t, 2> buffer_{};
        int buffered_ = 0;
    };
} // namespace nq
