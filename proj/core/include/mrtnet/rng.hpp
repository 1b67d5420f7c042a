#pragma once

#include <array>
#include <cstdint>

namespace mrtnet::rng {

// Names the independent uniform streams. Every draw in the library is a pure
// function of (seed, replication, t, i, purpose); there is no sequential
// generator state. This is what makes coupled chains (shared streams) and
// parallel replications reproducible regardless of scheduling.
enum class Purpose : std::uint32_t {
    Treatment = 0,
    Outcome = 1,
    Init = 2,
    LatentType = 3,
    Edge = 4,
};

namespace detail {

// Philox 4x32-10 (Salmon et al., SC 2011). Counter-based: the output block is
// a pure function of the 128-bit counter and the 64-bit key.
constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hilo(kPhiloxM4x32A, ctr[0], hi0, lo0);
        mul_hilo(kPhiloxM4x32B, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW32A;
        key[1] += kPhiloxW32B;
    }
    return ctr;
}

} // namespace detail

// 64 uniform random bits for the stream cell (seed, replication, t, i, purpose).
inline std::uint64_t bits(std::uint64_t seed, std::uint64_t replication, std::uint64_t t,
                          std::uint64_t i, Purpose purpose) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(replication),
        static_cast<std::uint32_t>(t),
        static_cast<std::uint32_t>(i),
        static_cast<std::uint32_t>(purpose),
    };
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32),
    };
    const auto out = detail::philox4x32_10(ctr, key);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform(std::uint64_t seed, std::uint64_t replication, std::uint64_t t,
                      std::uint64_t i, Purpose purpose) {
    return static_cast<double>(bits(seed, replication, t, i, purpose) >> 11) * 0x1.0p-53;
}

} // namespace mrtnet::rng
