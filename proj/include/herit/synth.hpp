#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "herit/rng.hpp"

namespace herit {

using GenotypeData = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Raw allele counts W (n individuals x N markers), entries in {0, 1, 2}.
// Frequencies are carried along when the matrix was simulated.
struct GenotypeMatrix {
    GenotypeData entries;
    std::vector<double> freqs;

    std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
    std::size_t markers() const { return static_cast<std::size_t>(entries.cols()); }

    // Throws ConfigError unless n >= 2, N >= 1 and every entry is 0, 1 or 2.
    void validate() const;
};

enum class DesignKind { Genotype, Gaussian };

std::string to_string(DesignKind kind);
DesignKind design_kind_from_string(const std::string& s);

struct SimulationConfig {
    std::size_t n = 500;
    std::size_t N = 5000;
    double q = 1.0;
    double eta_star = 0.5;
    double sigma_star2 = 1.0;
    double freq_lo = 0.1;
    double freq_hi = 0.5;
    std::uint64_t seed = 1;
    std::size_t replicates = 1;
    // Genotype: standardized Binomial(2, p_j) columns. Gaussian: standardized
    // i.i.d. N(0, 1) columns.
    DesignKind design = DesignKind::Genotype;

    void validate() const;
};

struct EffectVector {
    Eigen::VectorXd u;
    std::vector<bool> support;
    double sigma_u2 = 0.0;

    std::vector<std::size_t> support_indices() const;
};

struct EffectScale {
    double sigma_u2;
    double sigma_e2;
};

std::vector<double> sample_allele_frequencies(std::size_t N, double lo, double hi, Rng& rng);

// Each entry is the sum of two Bernoulli(p_j) draws, filled column by column.
GenotypeMatrix sample_genotypes(std::size_t n, std::span<const double> freqs, Rng& rng);

// Same as sample_genotypes, but a column that comes out monomorphic is redrawn
// from the same stream so that every column can be standardized.
GenotypeMatrix sample_polymorphic_genotypes(std::size_t n, std::span<const double> freqs, Rng& rng);

Eigen::MatrixXd sample_gaussian_design(std::size_t n, std::size_t N, Rng& rng);

// sigma_u^2 = eta* sigma*^2 / (N q), sigma_e^2 = (1 - eta*) sigma*^2.
EffectScale effect_scale(double eta_star, double sigma_star2, double q, std::size_t N);

// Inverse of effect_scale: returns {sigma*^2, eta*}.
std::pair<double, double> total_variance_and_heritability(double sigma_u2, double sigma_e2, double q,
                                                          std::size_t N);

EffectVector sample_effects(std::size_t N, double q, double sigma_u2, Rng& rng);

// Y = Z u + e, e ~ N(0, sigma_e2 I).
Eigen::VectorXd simulate_phenotype(const Eigen::MatrixXd& z, const EffectVector& u, double sigma_e2, Rng& rng);

struct Cohort {
    std::uint64_t seed = 0;
    GenotypeMatrix genotypes; // empty for Gaussian designs
    Eigen::MatrixXd z;        // standardized design
    EffectVector effects;
    EffectScale scale{0.0, 0.0};
    Eigen::VectorXd y;
};

// Draws one cohort from the streams below `seed`. The config's own seed and
// replicate count are ignored; callers pick the seed (see replicate_seed).
Cohort simulate_cohort(const SimulationConfig& cfg, std::uint64_t seed);

// Per-replicate seed derived from (master seed, cell index, replicate index).
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replicate);

} // namespace herit
