#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "herit/rng.hpp"
#include "herit/spectral.hpp"
#include "herit/synth.hpp"

namespace fixtures {

// Spectrum and rotated phenotype of one simulated cohort.
inline herit::SpectralDecomposition simulated(double eta, double a, std::size_t n, double q, std::uint64_t seed,
                                              herit::DesignKind design = herit::DesignKind::Genotype,
                                              double sigma2 = 1.0)
{
    herit::SimulationConfig cfg;
    cfg.n = n;
    cfg.N = static_cast<std::size_t>(std::llround(static_cast<double>(n) / a));
    cfg.q = q;
    cfg.eta_star = eta;
    cfg.sigma_star2 = sigma2;
    cfg.design = design;
    const herit::Cohort c = herit::simulate_cohort(cfg, seed);
    return herit::decompose(c.z, c.y, herit::DecomposeOptions{});
}

struct Instance {
    Eigen::VectorXd lambdas;
    Eigen::VectorXd y;
    double eta;
};

// Small random (lambda, y~, eta) triple: a Gaussian-design spectrum of random
// shape, observations drawn from the model at a random heritability, and an
// evaluation point in [0.05, 0.9].
inline Instance random_instance(herit::Rng& rng)
{
    const auto n = static_cast<std::size_t>(10 + rng.next_u64() % 60);
    const auto N = static_cast<std::size_t>(5 + rng.next_u64() % 150);
    const Eigen::MatrixXd z =
        herit::standardize(herit::sample_gaussian_design(n, N, rng), herit::MonomorphicPolicy::Error).z;
    const herit::EigenPairs ep = herit::eigendecompose(herit::kinship(z));
    const double eta_true = rng.uniform(0.0, 0.95);
    const double scale = std::exp(rng.uniform(-3.0, 3.0));
    Instance inst;
    inst.lambdas = ep.values;
    inst.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < inst.y.size(); ++i)
        inst.y(i) = scale * std::sqrt(eta_true * (ep.values(i) - 1.0) + 1.0) * rng.normal();
    inst.eta = rng.uniform(0.05, 0.9);
    return inst;
}

inline double rel_err(double got, double want)
{
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-12});
}

} // namespace fixtures
