#include "hierspin/rng.hpp"

#ifdef __SSE2__
#include <emmintrin.h>
#endif

namespace hierspin {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
    std::uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3];
    std::uint32_t k0 = k[0], k1 = k[1];
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kW0;
        k1 += kW1;
    }
    return {c0, c1, c2, c3};
}

void Philox4x32::refill() {
    const std::uint64_t base = (static_cast<std::uint64_t>(ctr_[1]) << 32) | ctr_[0];
#ifdef __SSE2__
    // four counters per vector group; lanes hold the same word of different blocks
    const __m128i m0 = _mm_set1_epi32(static_cast<int>(kM0));
    const __m128i m1 = _mm_set1_epi32(static_cast<int>(kM1));
    const __m128i maskLo = _mm_set1_epi64x(0xFFFFFFFFll);
    const __m128i maskHi = _mm_set1_epi64x(static_cast<long long>(0xFFFFFFFF00000000ull));
    for (int g = 0; g < kBatch; g += 4) {
        alignas(16) std::uint32_t w0[4], w1[4];
        for (int b = 0; b < 4; ++b) {
            const std::uint64_t c = base + g + b;
            w0[b] = static_cast<std::uint32_t>(c);
            w1[b] = static_cast<std::uint32_t>(c >> 32);
        }
        __m128i c0 = _mm_load_si128(reinterpret_cast<const __m128i*>(w0));
        __m128i c1 = _mm_load_si128(reinterpret_cast<const __m128i*>(w1));
        __m128i c2 = _mm_set1_epi32(static_cast<int>(ctr_[2]));
        __m128i c3 = _mm_set1_epi32(static_cast<int>(ctr_[3]));
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int r = 0; r < 10; ++r) {
            const __m128i e0 = _mm_mul_epu32(c0, m0);
            const __m128i o0 = _mm_mul_epu32(_mm_srli_epi64(c0, 32), m0);
            const __m128i e1 = _mm_mul_epu32(c2, m1);
            const __m128i o1 = _mm_mul_epu32(_mm_srli_epi64(c2, 32), m1);
            const __m128i hi0 = _mm_or_si128(_mm_srli_epi64(e0, 32), _mm_and_si128(o0, maskHi));
            const __m128i lo0 = _mm_or_si128(_mm_and_si128(e0, maskLo), _mm_slli_epi64(o0, 32));
            const __m128i hi1 = _mm_or_si128(_mm_srli_epi64(e1, 32), _mm_and_si128(o1, maskHi));
            const __m128i lo1 = _mm_or_si128(_mm_and_si128(e1, maskLo), _mm_slli_epi64(o1, 32));
            c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), _mm_set1_epi32(static_cast<int>(k0)));
            c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), _mm_set1_epi32(static_cast<int>(k1)));
            c1 = lo1;
            c3 = lo0;
            k0 += kW0;
            k1 += kW1;
        }
        alignas(16) std::uint32_t out[4][4];
        _mm_store_si128(reinterpret_cast<__m128i*>(out[0]), c0);
        _mm_store_si128(reinterpret_cast<__m128i*>(out[1]), c1);
        _mm_store_si128(reinterpret_cast<__m128i*>(out[2]), c2);
        _mm_store_si128(reinterpret_cast<__m128i*>(out[3]), c3);
        for (int b = 0; b < 4; ++b)
            for (int w = 0; w < 4; ++w) buf_[4 * (g + b) + w] = out[w][b];
    }
#else
    for (int b = 0; b < kBatch; ++b) {
        const std::uint64_t c = base + b;
        const Counter out = block({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), ctr_[2], ctr_[3]}, key_);
        for (int w = 0; w < 4; ++w) buf_[4 * b + w] = out[w];
    }
#endif
    const std::uint64_t next = base + kBatch;
    ctr_[0] = static_cast<std::uint32_t>(next);
    ctr_[1] = static_cast<std::uint32_t>(next >> 32);
    pos_ = 0;
}

Stream::Stream(std::uint64_t masterSeed, std::uint64_t replicaIndex, std::uint32_t tag)
    : eng_(masterSeed, (replicaIndex & 0xFFFFFFFFull) | (static_cast<std::uint64_t>(tag) << 32)) {}

std::uint64_t Stream::below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection
    unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        std::uint64_t t = (0 - n) % n;
        while (lo < t) {
            m = static_cast<unsigned __int128>(eng_()) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace hierspin
