#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "herit/likelihood.hpp"
#include "herit/spectral.hpp"

namespace herit {

// Empirical variance of g(eta, lambda_i) over the spectrum (mean of squares
// minus squared mean).
double gamma_n2(double eta, const Eigen::VectorXd& lambdas);

// Variance of g(eta, .) under the Marchenko-Pastur law with ratio a.
double gamma2_limit(double a, double eta);

// sqrt(2 / (n gamma_n2)); throws UnidentifiableModel when gamma_n2 <= 0.
double se_q1(double gamma_n2, std::size_t n);

// Eigenvalue-average version of the sparse-case factor
//   [ m(l (l-1) / d^2) - m(l / d) m((l-1) / d) ]^2,  d = eta (l - 1) + 1.
double s_empirical(double eta, const Eigen::VectorXd& lambdas);

// Same factor with averages replaced by Marchenko-Pastur integrals.
double s_limit(double a, double eta);

// 2 / gamma2 + 3 a^2 eta^2 (1/q - 1) S / gamma2^2.
double tau2(double a, double eta, double q, double gamma2, double s);

struct Interval {
    double lo;
    double hi;
};

// Standard normal quantile (Boost.Math).
double normal_quantile(double p);

// eta_hat -/+ z_{(1+level)/2} se, clipped to [0, 1].
Interval confidence_interval(double eta_hat, double se, double level);

struct QuadFormVariance {
    double exact; // with sum_i M_ii^2
    double bound; // with Tr[D^2 H^2] in place of sum_i M_ii^2
};

// Conditional variance of y_rot' H y_rot for diagonal H (given as a vector),
// eigenvalues D, and right singular vectors V of Z / sqrt(N) (N x N, or its
// first n columns).
QuadFormVariance var_quadform(const Eigen::VectorXd& h, const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& v,
                              double eta, double sigma2, double q);

struct EstimateReport {
    double eta_hat = 0.0;
    double sigma2_hat = 0.0;
    double gamma_n2 = 0.0;
    double se_q1 = 0.0;
    std::optional<double> q_assumed;
    std::optional<double> s_n;
    std::optional<double> tau_n2;
    std::optional<double> se_sparse;
    double ci_level = 0.95;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    double a = 0.0;
    std::size_t n = 0;           // individuals
    std::size_t n_effective = 0; // eigenvalues used
    std::size_t markers = 0;
    std::size_t projected = 0;
    SolverResult solver;

    // se_sparse when q was supplied, otherwise se_q1.
    double se() const { return se_sparse.value_or(se_q1); }
};

// Standard errors and interval at the solver's estimate. The interval uses
// se_sparse when q is supplied.
EstimateReport make_report(const SpectralDecomposition& sd, const SolverResult& sr, std::optional<double> q,
                           double level);

} // namespace herit
