#pragma once

#include <cstdint>

namespace editkit {

// Stateless counter-based pseudo-random source.
//
// Every draw is a pure function of (seed, stream, counter): the three words
// are folded through the splitmix64 finalizer, so any counter of any stream
// can be evaluated in isolation, in any order, on any thread. Two instances
// built from the same seed produce identical bytes on every platform; there
// is no hidden state to advance or share.
//
// Streams separate independent uses (image content, noise, trajectories)
// that draw from the same seed without counter collisions.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    // 64 uniform bits for the given counter.
    std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix(seed_ ^ mix(stream_ ^ mix(counter)));
    }

    // Uniform in [0, bound). bound == 0 yields 0.
    std::uint32_t below(std::uint64_t counter, std::uint32_t bound) const noexcept {
        if (bound == 0) {
            return 0;
        }
        // Fixed-point multiply on the top 32 bits; platform-independent.
        return static_cast<std::uint32_t>(((bits(counter) >> 32) * bound) >> 32);
    }

    // Uniform integer in [lo, hi], endpoints included.
    int range(std::uint64_t counter, int lo, int hi) const noexcept {
        if (hi <= lo) {
            return lo;
        }
        const auto span = static_cast<std::uint32_t>(hi - lo) + 1u;
        return lo + static_cast<int>(below(counter, span));
    }

    // Uniform double in [0, 1).
    double unit(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Uniform float in [-magnitude, magnitude).
    float symmetric(std::uint64_t counter, float magnitude) const noexcept {
        return static_cast<float>((unit(counter) * 2.0 - 1.0) * magnitude);
    }

private:
    // splitmix64 finalizer (Steele, Lea, Flood).
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace editkit
