#include "herit/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "herit/error.hpp"

namespace herit {

namespace {

GaussLegendre compute_rule(std::size_t order)
{
    GaussLegendre rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    const double nd = static_cast<double>(order);
    for (std::size_t i = 0; i < half; ++i) {
        // Newton on P_n from the Tricomi-style initial guess.
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (nd + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = nd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

} // namespace

const GaussLegendre& gauss_legendre(std::size_t order)
{
    if (order < 2) throw ConfigError("gauss_legendre: order must be at least 2");
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussLegendre>(compute_rule(order));
    return *slot;
}

} // namespace herit
