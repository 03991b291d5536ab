#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fv {

// Counter-based splitmix64 stream. All randomness in the project flows
// through this generator, so every run is reproducible from (seed, stream id,
// draw index) alone, independent of platform and thread count.
//
// Contract (pinned, do not change without bumping checkpoint formats):
//   state_0   = seed
//   draw_i    = scramble(state_{i-1} + 0x9E3779B97F4A7C15)
//   scramble  = splitmix64 finalizer (Steele, Lea, Flood 2014)
//   substream = scramble(scramble(seed) ^ (0xD1B54A32D192ED03 * (id + 1)))
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Seed for an independent named substream of `seed`.
    static std::uint64_t substream(std::uint64_t seed, std::uint64_t id) {
        return scramble(scramble(seed) ^ (0xD1B54A32D192ED03ull * (id + 1)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return scramble(state_);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform index in [0, n). Multiply-shift map; bias is <= n / 2^64.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller. Consumes exactly two draws; the sine
    // twin is discarded to keep the consumption count trivially predictable.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
};

// Named purposes for the per-iteration substreams used in training. Keeping
// these disjoint is what makes a factor_vae(gamma=0) run bit-identical to a
// plain vae run: the vae path simply never consumes the discriminator-side
// streams.
enum class Stream : std::uint64_t {
    init = 1,
    batch_primary = 2,
    noise_primary = 3,
    batch_secondary = 4,
    noise_secondary = 5,
    permutation = 6,
    prior_sample = 7,
    eval = 8,
};

inline CounterRng stream_rng(std::uint64_t seed, Stream s) {
    return CounterRng(CounterRng::substream(seed, static_cast<std::uint64_t>(s)));
}

// Per-iteration stream: resume needs no RNG state in the checkpoint because
// every iteration derives its draws from (seed, stream, iteration).
inline CounterRng iter_rng(std::uint64_t seed, Stream s, std::uint64_t iteration) {
    const std::uint64_t base = CounterRng::substream(seed, static_cast<std::uint64_t>(s));
    return CounterRng(CounterRng::substream(base, iteration));
}

}  // namespace fv
