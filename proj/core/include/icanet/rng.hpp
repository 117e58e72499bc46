#pragma once

#include <cstdint>
#include <string_view>

namespace icanet {

// splitmix64; the whole project draws randomness from this one generator so
// fixtures are reproducible down to the bit from a seed alone.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // 53-bit mantissa draw in [0,1).
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Unbiased draw in [0, n).
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view text);

// Stream seed for a named sub-generator: decorrelates per-tensor /
// per-purpose draws from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace icanet
