#pragma once
// Counter-based random streams.
//
// Every random quantity in the library is drawn from a Philox4x32-10 stream
// keyed by (seed, purpose) and addressed by a 64-bit stream index (typically a
// trial number). Streams are independent of each other and of execution order,
// so Monte-Carlo results do not depend on thread scheduling.

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace dbalign {

// Which consumer owns a stream. Values are part of the reproducibility
// contract; do not renumber.
enum class Purpose : std::uint32_t {
    null_sample = 1,
    alt_sample = 2,
    pd_estimate = 3,
    test_harness = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Raw Philox4x32 block function with 10 rounds (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

struct StreamId {
    std::uint64_t seed = 0;
    Purpose purpose = Purpose::test_harness;
    std::uint64_t index = 0;
};

// UniformRandomBitGenerator over one Philox stream. Counter words 0-1 hold the
// block number, words 2-3 the stream index; the key is derived from
// (seed, purpose).
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(StreamId id) {
        const std::uint64_t k = splitmix64(id.seed ^ splitmix64(static_cast<std::uint64_t>(id.purpose)));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        index_ = id.index;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 2) refill();
        return buffer_[used_++];
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, bound) by rejection, bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t r;
        do {
            r = (*this)();
        } while (r >= limit);
        return r % bound;
    }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
        const auto out = philox4x32_10(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        used_ = 0;
    }

    std::array<std::uint32_t, 2> key_{};
    std::uint64_t index_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int used_ = 2;
};

// Uniform random permutation of {0..n-1} by Fisher-Yates.
inline std::vector<std::size_t> random_permutation(std::size_t n, Stream& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace dbalign
