#pragma once

#include <cstdint>

namespace inhomog {

// Counter-based draws: every value is a pure function of (seed, stream, counters),
// so two implementations can consume identical randomness in any order.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::uint64_t bits(std::uint64_t c0, std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                       std::uint64_t c3 = 0) const;
    // in (0, 1), 53-bit resolution
    double uniform(std::uint64_t c0, std::uint64_t c1 = 0, std::uint64_t c2 = 0, std::uint64_t c3 = 0) const;
    double exponential(std::uint64_t c0, std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                       std::uint64_t c3 = 0) const;
};

std::uint64_t mix64(std::uint64_t z);

// Sequential view over one key prefix, for code that just needs "the next draw".
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : s_{seed, stream} {}
    double uniform() { return s_.uniform(0xC0FFEEull, n_++); }
    double exponential() { return s_.exponential(0xC0FFEEull, n_++); }
    std::uint64_t next() { return s_.bits(0xC0FFEEull, n_++); }
    const RngStream& key() const { return s_; }

private:
    RngStream s_;
    std::uint64_t n_ = 0;
};

}  // namespace inhomog
