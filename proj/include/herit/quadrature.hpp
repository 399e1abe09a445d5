#pragma once

#include <cstddef>
#include <vector>

namespace herit {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Rules are computed once per order and cached; the returned reference stays
// valid for the lifetime of the program. Thread-safe.
const GaussLegendre& gauss_legendre(std::size_t order);

} // namespace herit
