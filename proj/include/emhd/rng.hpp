#ifndef EMHD_RNG_HPP
#define EMHD_RNG_HPP

#include <cstdint>

namespace emhd {

// Counter-based generator: value i of stream s is a pure function of
// (seed, s, i), so parallel consumers see identical sequences regardless
// of scheduling. Mixing is splitmix64.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t bits(std::uint64_t i) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (i + 1) + (stream_ << 32);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform(std::uint64_t i) const {
        return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
    }

    // uniform in [a,b)
    double uniform(std::uint64_t i, double a, double b) const {
        return a + (b - a) * uniform(i);
    }

    CounterRng substream(std::uint64_t s) const { return CounterRng(seed_, stream_ ^ s); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace emhd

#endif
