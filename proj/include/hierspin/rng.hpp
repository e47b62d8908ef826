// Counter-based random streams (Philox4x32-10) keyed by master seed and replica index.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace hierspin {

class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t key, std::uint64_t streamHi)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          ctr_{0u, 0u, static_cast<std::uint32_t>(streamHi), static_cast<std::uint32_t>(streamHi >> 32)} {}

    static Counter block(Counter c, Key k);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    static constexpr int kBatch = 8;

    result_type operator()() {
        if (pos_ >= 4 * kBatch) refill();
        std::uint64_t lo = buf_[pos_++];
        std::uint64_t hi = buf_[pos_++];
        return (hi << 32) | lo;
    }

    std::uint64_t blocksUsed() const {
        return (static_cast<std::uint64_t>(ctr_[1]) << 32) | ctr_[0];
    }

private:
    void refill();

    Key key_;
    Counter ctr_;
    std::array<std::uint32_t, 4 * kBatch> buf_{};
    int pos_ = 4 * kBatch;
};

struct SeedSpec {
    std::uint64_t masterSeed = 0;
    std::uint64_t replicaIndex = 0;
};

// Streams with distinct (masterSeed, replicaIndex, tag) never share a counter block.
class Stream {
public:
    Stream(std::uint64_t masterSeed, std::uint64_t replicaIndex, std::uint32_t tag = 0);
    explicit Stream(const SeedSpec& s, std::uint32_t tag = 0) : Stream(s.masterSeed, s.replicaIndex, tag) {}

    std::uint64_t bits() { return eng_(); }
    // uniform on the open interval (0, 1)
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
    double normal() { return normal_(eng_); }
    double exponential() { return expo_(eng_); }
    std::uint64_t below(std::uint64_t n);

private:
    Philox4x32 eng_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::exponential_distribution<double> expo_{1.0};
};

}  // namespace hierspin
