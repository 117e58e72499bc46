#include "icanet/rng.hpp"

namespace icanet {

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % n;
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    SplitMix64 mixer(seed ^ fnv1a64(tag));
    return mixer.next();
}

}  // namespace icanet
