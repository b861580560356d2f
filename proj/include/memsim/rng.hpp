#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace memsim {

// Stream purposes keyed into the RNG so every consumer gets an independent,
// order-invariant sequence.
enum class StreamPurpose : std::uint64_t {
    program = 1,   // conductance programming variation
    weight_init = 2,
    data = 3,      // dataset / operand generation
    shuffle = 4,
    seeding = 5,   // k-means and friends
    misc = 6,
};

// Counter-seeded generator: the stream id (purpose, block-row, block-col,
// slice, cycle, ...) is hashed together with the seed into the initial state,
// so the sequence depends only on (seed, stream), never on call order.
// xoshiro256** core, splitmix64 state expansion.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
        std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
        for (std::uint64_t id : stream) h = splitmix(h ^ (id + 0x632be59bd9b4e019ULL));
        for (auto& si : s_) si = splitmix(h);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }
    SeededRng(std::uint64_t seed, StreamPurpose p, std::uint64_t a = 0,
              std::uint64_t b = 0, std::uint64_t c = 0, std::uint64_t d = 0)
        : SeededRng(seed, {static_cast<std::uint64_t>(p), a, b, c, d}) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller (deterministic across platforms, unlike
    // std::normal_distribution)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t splitmix(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t splitmix(std::uint64_t&& x) {
        std::uint64_t t = x;
        return splitmix(t);
    }
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace memsim
