#include "inhomog/rng.hpp"

#include <cmath>

namespace inhomog {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t RngStream::bits(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2, std::uint64_t c3) const {
    std::uint64_t h = mix64(seed ^ 0x5851F42D4C957F2Dull);
    h = mix64(h ^ stream);
    h = mix64(h ^ c0);
    h = mix64(h ^ c1);
    h = mix64(h ^ c2);
    return mix64(h ^ c3);
}

double RngStream::uniform(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2, std::uint64_t c3) const {
    return (double(bits(c0, c1, c2, c3) >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::exponential(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2, std::uint64_t c3) const {
    return -std::log(uniform(c0, c1, c2, c3));
}

}  // namespace inhomog
