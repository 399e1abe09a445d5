#include "herit/rng.hpp"

#include <cmath>
#include <vector>

namespace herit {

namespace {

void push_u64(std::vector<std::uint32_t>& words, std::uint64_t v)
{
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
}

} // namespace

Rng::Rng(std::uint64_t seed)
{
    std::vector<std::uint32_t> words;
    push_u64(words, seed);
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::vector<std::uint32_t> words;
    push_u64(words, master);
    // Length tag keeps {1} and {1, 0} apart.
    push_u64(words, 0x9e3779b97f4a7c15ULL ^ path.size());
    for (auto p : path) push_u64(words, p);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

} // namespace herit
