#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace sfl {

// Deterministic, platform-independent random streams. Replication r draws
// from a stream keyed by (master_seed, r); streams never share state, so
// any scheduling of replications across threads yields the same numbers.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman & Vigna, public domain reference implementation).
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
        // splitmix64 never yields four zero words from any seed, but keep
        // the generator well-defined regardless.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    // Stream for replication `stream` of the experiment seeded `master_seed`.
    static Xoshiro256pp for_stream(std::uint64_t master_seed, std::uint64_t stream) {
        std::uint64_t sm = master_seed;
        std::uint64_t base = splitmix64(sm);
        sm = base ^ (0xA24BAED4963EE407ULL * (stream + 1));
        return Xoshiro256pp(splitmix64(sm));
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log argument.
    double uniform01_open_low() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the spare value is cached, so a fill
    // of 2k entries consumes exactly 2k uniforms.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    // +/-1 equiprobable.
    double rademacher() { return (next() >> 63) ? 1.0 : -1.0; }

    // Uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1, fourth moment 9/5.
    double uniform_sym() {
        return (2.0 * uniform01() - 1.0) * 1.7320508075688772935;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sfl
