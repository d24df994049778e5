#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bpst {

/// Portable pseudo-random stream. std::mt19937_64 output is fixed by the
/// standard; the distributions below avoid <random> distributions, whose
/// output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do x = next();
        while (x >= limit);
        return x % n;
    }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

/// Seed of replication `rep` derived from a run seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t rep) { return seed ^ rep; }

} // namespace bpst
