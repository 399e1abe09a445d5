#include "herit/synth.hpp"

#include <cmath>

#include "herit/error.hpp"
#include "herit/spectral.hpp"

namespace herit {

void GenotypeMatrix::validate() const
{
    if (entries.rows() < 2) throw ConfigError("genotype matrix needs at least 2 individuals");
    if (entries.cols() < 1) throw ConfigError("genotype matrix needs at least 1 marker");
    for (Eigen::Index j = 0; j < entries.cols(); ++j)
        for (Eigen::Index i = 0; i < entries.rows(); ++i)
            if (entries(i, j) > 2)
                throw ConfigError("genotype entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                  ") is not in {0, 1, 2}");
}

std::string to_string(DesignKind kind)
{
    return kind == DesignKind::Genotype ? "genotype" : "gaussian";
}

DesignKind design_kind_from_string(const std::string& s)
{
    if (s == "genotype") return DesignKind::Genotype;
    if (s == "gaussian") return DesignKind::Gaussian;
    throw ConfigError("unknown design '" + s + "' (expected genotype or gaussian)");
}

void SimulationConfig::validate() const
{
    if (n < 2) throw ConfigError("n must be at least 2");
    if (N < 1) throw ConfigError("N must be at least 1");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0, 1]");
    if (!(eta_star >= 0.0 && eta_star < 1.0)) throw ConfigError("eta_star must lie in [0, 1)");
    if (!(sigma_star2 > 0.0) || !std::isfinite(sigma_star2)) throw ConfigError("sigma_star2 must be positive");
    if (!(freq_lo > 0.0 && freq_lo <= freq_hi && freq_hi < 1.0))
        throw ConfigError("allele frequency range must satisfy 0 < freq_lo <= freq_hi < 1");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
}

std::vector<std::size_t> EffectVector::support_indices() const
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (support[i]) idx.push_back(i);
    return idx;
}

std::vector<double> sample_allele_frequencies(std::size_t N, double lo, double hi, Rng& rng)
{
    if (!(lo > 0.0 && lo <= hi && hi < 1.0))
        throw ConfigError("allele frequency range must satisfy 0 < lo <= hi < 1");
    std::vector<double> p(N);
    for (auto& v : p) v = (lo == hi) ? lo : rng.uniform(lo, hi);
    return p;
}

namespace {

void check_freqs(std::span<const double> freqs)
{
    for (std::size_t j = 0; j < freqs.size(); ++j)
        if (!(freqs[j] > 0.0 && freqs[j] < 1.0))
            throw ConfigError("allele frequency of marker " + std::to_string(j) + " is outside (0, 1)");
}

void fill_column(GenotypeData& w, Eigen::Index j, double p, Rng& rng)
{
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const int a1 = rng.bernoulli(p) ? 1 : 0;
        const int a2 = rng.bernoulli(p) ? 1 : 0;
        w(i, j) = static_cast<std::uint8_t>(a1 + a2);
    }
}

bool is_monomorphic(const GenotypeData& w, Eigen::Index j)
{
    for (Eigen::Index i = 1; i < w.rows(); ++i)
        if (w(i, j) != w(0, j)) return false;
    return true;
}

} // namespace

GenotypeMatrix sample_genotypes(std::size_t n, std::span<const double> freqs, Rng& rng)
{
    check_freqs(freqs);
    GenotypeMatrix g;
    g.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(freqs.size()));
    g.freqs.assign(freqs.begin(), freqs.end());
    for (Eigen::Index j = 0; j < g.entries.cols(); ++j) fill_column(g.entries, j, freqs[j], rng);
    return g;
}

GenotypeMatrix sample_polymorphic_genotypes(std::size_t n, std::span<const double> freqs, Rng& rng)
{
    if (n < 2) throw ConfigError("polymorphic genotypes need at least 2 individuals");
    check_freqs(freqs);
    GenotypeMatrix g;
    g.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(freqs.size()));
    g.freqs.assign(freqs.begin(), freqs.end());
    constexpr int kMaxRedraws = 100000;
    for (Eigen::Index j = 0; j < g.entries.cols(); ++j) {
        int attempt = 0;
        do {
            if (attempt++ == kMaxRedraws)
                throw NumericalFailure("marker " + std::to_string(j) + " stayed monomorphic after redraws");
            fill_column(g.entries, j, freqs[j], rng);
        } while (is_monomorphic(g.entries, j));
    }
    return g;
}

Eigen::MatrixXd sample_gaussian_design(std::size_t n, std::size_t N, Rng& rng)
{
    Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal();
    return w;
}

EffectScale effect_scale(double eta_star, double sigma_star2, double q, std::size_t N)
{
    if (!(eta_star >= 0.0 && eta_star < 1.0)) throw ConfigError("eta_star must lie in [0, 1)");
    if (!(sigma_star2 > 0.0)) throw ConfigError("sigma_star2 must be positive");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0, 1]");
    if (N < 1) throw ConfigError("N must be at least 1");
    return {eta_star * sigma_star2 / (static_cast<double>(N) * q), (1.0 - eta_star) * sigma_star2};
}

std::pair<double, double> total_variance_and_heritability(double sigma_u2, double sigma_e2, double q,
                                                          std::size_t N)
{
    const double genetic = static_cast<double>(N) * q * sigma_u2;
    const double total = genetic + sigma_e2;
    return {total, genetic / total};
}

EffectVector sample_effects(std::size_t N, double q, double sigma_u2, Rng& rng)
{
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0, 1]");
    if (!(sigma_u2 >= 0.0)) throw ConfigError("sigma_u2 must be non-negative");
    EffectVector e;
    e.sigma_u2 = sigma_u2;
    e.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    e.support.assign(N, false);
    const double sd = std::sqrt(sigma_u2);
    for (std::size_t i = 0; i < N; ++i) {
        // q = 1 consumes no Bernoulli draw so the non-sparse stream is plain Gaussian.
        const bool on = (q >= 1.0) || rng.bernoulli(q);
        e.support[i] = on;
        if (on) e.u(static_cast<Eigen::Index>(i)) = sd * rng.normal();
    }
    return e;
}

Eigen::VectorXd simulate_phenotype(const Eigen::MatrixXd& z, const EffectVector& u, double sigma_e2, Rng& rng)
{
    if (z.cols() != u.u.size())
        throw ShapeError("design has " + std::to_string(z.cols()) + " columns but effect vector has " +
                         std::to_string(u.u.size()) + " entries");
    if (!(sigma_e2 >= 0.0)) throw ConfigError("sigma_e2 must be non-negative");
    Eigen::VectorXd y = z * u.u;
    const double sd = std::sqrt(sigma_e2);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * rng.normal();
    return y;
}

Cohort simulate_cohort(const SimulationConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    Cohort c;
    c.seed = seed;
    if (cfg.design == DesignKind::Genotype) {
        Rng freq_rng = Rng::stream(seed, {streams::frequencies});
        Rng geno_rng = Rng::stream(seed, {streams::genotypes});
        const auto freqs = sample_allele_frequencies(cfg.N, cfg.freq_lo, cfg.freq_hi, freq_rng);
        c.genotypes = sample_polymorphic_genotypes(cfg.n, freqs, geno_rng);
        c.z = standardize(c.genotypes, MonomorphicPolicy::Error).z;
    } else {
        Rng design_rng = Rng::stream(seed, {streams::gaussian_design});
        c.z = standardize(sample_gaussian_design(cfg.n, cfg.N, design_rng), MonomorphicPolicy::Error).z;
    }
    c.scale = effect_scale(cfg.eta_star, cfg.sigma_star2, cfg.q, cfg.N);
    Rng effect_rng = Rng::stream(seed, {streams::effects});
    c.effects = sample_effects(cfg.N, cfg.q, c.scale.sigma_u2, effect_rng);
    Rng noise_rng = Rng::stream(seed, {streams::noise});
    c.y = simulate_phenotype(c.z, c.effects, c.scale.sigma_e2, noise_rng);
    return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replicate)
{
    return splitmix64(master ^ splitmix64(cell ^ splitmix64(replicate)));
}

} // namespace herit
