#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Deterministic RNG used everywhere randomness is needed.
//
// std::shuffle / std::uniform_int_distribution are implementation-defined, so
// they cannot back the bit-identical-output guarantees (same seed => same
// dataset bytes, same metrics stream, resumable mid-run). SplitMix64 is tiny,
// fast, well mixed, and its whole state is two u64 words that serialize
// directly into checkpoints.
namespace mrrlvr {

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed), calls_(0) {}

    // Raw 64-bit draw (SplitMix64 step).
    std::uint64_t next_u64() {
        ++calls_;
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, bound). bound must be > 0.
    // Rejection-sampled so every value is exactly equally likely.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    // Checkpointable state: the SplitMix64 word plus a call counter
    // (the counter is informational; the word alone determines the stream).
    std::uint64_t state() const { return state_; }
    std::uint64_t calls() const { return calls_; }
    void restore(std::uint64_t state, std::uint64_t calls) {
        state_ = state;
        calls_ = calls;
    }

    // Derive an independent child stream, e.g. one per worker or per record.
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0x9E3779B97F4A7C15ULL));
    }

private:
    std::uint64_t state_;
    std::uint64_t calls_;
};

// Stable 64-bit content hash (FNV-1a). Used to derive per-record seeds and
// dataset fingerprints; must never change across versions, so it is pinned
// here rather than delegated to std::hash (which is unspecified).
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t seed = 0xCBF29CE484222325ULL) {
    return fnv1a64(s.data(), s.size(), seed);
}

}  // namespace mrrlvr
