#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace herit {

// Seedable generator with portable output. The engine (mt19937_64) and
// std::seed_seq are fully specified by the standard; the standard
// distributions are not, so uniform/normal draws are done here.
//
// Independent streams are addressed by a path of integers below a master
// seed, e.g. Rng::stream(seed, {replicate, component}). Streams for
// different paths are unrelated, so replicates can run in any order.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via the Marsaglia polar method.
    double normal();

private:
    explicit Rng(std::seed_seq& seq) : engine_(seq) {}

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream components used by the cohort simulator.
namespace streams {
inline constexpr std::uint64_t frequencies = 1;
inline constexpr std::uint64_t genotypes = 2;
inline constexpr std::uint64_t effects = 3;
inline constexpr std::uint64_t noise = 4;
inline constexpr std::uint64_t gaussian_design = 5;
} // namespace streams

} // namespace herit
