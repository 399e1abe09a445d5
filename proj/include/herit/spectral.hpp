#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "herit/error.hpp"
#include "herit/quadrature.hpp"
#include "herit/synth.hpp"

namespace herit {

// Columns empirically centered with unit divide-by-n variance: every column
// sums to 0 and its squares sum to n. `kept` maps columns of z back to the
// input; `dropped` lists monomorphic input columns removed under Drop.
struct StandardizedDesign {
    Eigen::MatrixXd z;
    std::vector<std::size_t> kept;
    std::vector<std::size_t> dropped;

    std::size_t n() const { return static_cast<std::size_t>(z.rows()); }
    std::size_t markers() const { return static_cast<std::size_t>(z.cols()); }
};

enum class MonomorphicPolicy { Error, Drop };

StandardizedDesign standardize(const GenotypeMatrix& w, MonomorphicPolicy policy);
StandardizedDesign standardize(const Eigen::MatrixXd& w, MonomorphicPolicy policy);

// (I - P_X) y. Throws RankDeficientCovariates when X is not of full column
// rank or has p >= n columns.
Eigen::VectorXd residualize(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

// R = Z Z' / N.
Eigen::MatrixXd kinship(const Eigen::MatrixXd& z);
inline Eigen::MatrixXd kinship(const StandardizedDesign& d) { return kinship(d.z); }

struct EigenPairs {
    Eigen::VectorXd values;  // descending
    Eigen::MatrixXd vectors; // column k pairs with values(k)
};

inline constexpr double kEigenClampTolerance = 1e-8;

// Symmetric eigendecomposition, eigenvalues sorted descending. Round-off
// negatives in (-1e-8, 0) are set to 0.
EigenPairs eigendecompose(const Eigen::MatrixXd& r);

Eigen::VectorXd rotate(const Eigen::MatrixXd& u, const Eigen::VectorXd& y);

// Right-continuous empirical spectral CDF: fraction of lambdas <= x.
double esd(const Eigen::VectorXd& lambdas, double x);

// Marchenko-Pastur law with ratio a: density on [a_minus, a_plus] plus an
// atom of mass max(0, 1 - 1/a) at zero.
struct MPLaw {
    double a;
    double a_minus;
    double a_plus;
    double mass_at_zero;

    explicit MPLaw(double ratio);
};

namespace detail {

// Continuous-part weight at node theta after substituting
// lambda = 1 + a - 2 sqrt(a) cos(theta): d nu = 2 sin^2(theta) / (pi lambda) d theta.
inline double mp_theta_weight(const MPLaw& law, double theta, double& lambda)
{
    const double s = std::sin(theta);
    lambda = 1.0 + law.a - 2.0 * std::sqrt(law.a) * std::cos(theta);
    if (lambda <= 0.0) {
        // a = 1 edge: 2 sin^2 / (pi * 4 sin^2(theta/2)) = 2 cos^2(theta/2) / pi.
        const double c = std::cos(0.5 * theta);
        return 2.0 * c * c / M_PI;
    }
    return 2.0 * s * s / (M_PI * lambda);
}

} // namespace detail

inline constexpr std::size_t kMpQuadratureOrder = 512;

double mp_cdf(const MPLaw& law, double x);

// mass_at_zero * f(0) + integral of f against the continuous part.
template <class F>
double mp_integrate(const MPLaw& law, F&& f, std::size_t order = kMpQuadratureOrder)
{
    const GaussLegendre& rule = gauss_legendre(order);
    double total = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double theta = 0.5 * M_PI * (rule.nodes[k] + 1.0);
        double lambda = 0.0;
        const double w = detail::mp_theta_weight(law, theta, lambda);
        const double v = f(lambda);
        if (!std::isfinite(v)) throw NumericalFailure("mp_integrate: integrand is not finite");
        total += 0.5 * M_PI * rule.weights[k] * w * v;
    }
    if (law.mass_at_zero > 0.0) {
        const double v0 = f(0.0);
        if (!std::isfinite(v0)) throw NumericalFailure("mp_integrate: integrand is not finite at 0");
        total += law.mass_at_zero * v0;
    }
    return total;
}

struct DecomposeOptions {
    // Work in the orthogonal complement of the all-ones vector (and of any
    // covariate columns). Z is column-centered, so the ones vector always
    // lies in the kernel of R.
    bool project_intercept = true;
    std::optional<Eigen::MatrixXd> covariates;
    bool keep_eigvecs = false;
};

// Everything the estimator needs: the spectrum of R restricted to the
// complement of the projected directions, and the observations rotated
// into its eigenbasis.
struct SpectralDecomposition {
    Eigen::VectorXd lambdas; // descending
    Eigen::VectorXd y_rot;
    double a = 0.0;          // n / N
    std::size_t n_obs = 0;   // individuals
    std::size_t n_markers = 0;
    std::size_t projected = 0; // dimensions removed (intercept + covariates)
    std::optional<Eigen::MatrixXd> eigvecs; // n x (n - projected), columns orthonormal

    std::size_t n_effective() const { return static_cast<std::size_t>(lambdas.size()); }
};

SpectralDecomposition decompose(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const DecomposeOptions& opts);

} // namespace herit
