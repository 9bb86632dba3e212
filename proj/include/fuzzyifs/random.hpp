#pragma once

#include <cstdint>

namespace fuzzyifs {

/// xorshift64* (Vigna 2014). The seed goes through one splitmix64 round so that
/// small or zero seeds still give a well-mixed, non-zero state.
///
///   state  = splitmix64(seed), or 0x9E3779B97F4A7C15 if that is 0
///   next() : x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///   below(k) = high 64 bits of next() * k
///
/// Aleatory nets depend on this exact sequence; keep it stable.
class XorShift64Star {
public:
    explicit XorShift64Star(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0)
            state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() noexcept {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    /// Integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Double in [0, 1) from the top 53 bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t state() const noexcept { return state_; }

    static std::uint64_t splitmix64(std::uint64_t x) noexcept {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t state_;
};

} // namespace fuzzyifs
