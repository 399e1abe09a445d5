#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace herit {

// Profile likelihood in the heritability eta for observations rotated into
// the eigenbasis of the kinship matrix:
//
//   L_n(eta) = -log( (1/n) sum y_i^2 / d_i ) - (1/n) sum log d_i,
//   d_i = eta (lambda_i - 1) + 1.
//
// All functions below take (lambdas, y_rot) of equal length and require
// eta in [0, 1). They throw DegenerateData when y_rot is identically zero.

// (lambda - 1) / (eta (lambda - 1) + 1)
double g(double eta, double lambda);

double profile_sigma2(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot);
double loglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot);
double dloglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot);
double d2loglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot);

struct SolverConfig {
    double delta = 0.01;
    std::vector<double> inits{0.1, 0.5, 0.9};
    int max_iter = 20;
    double tol = 1e-8;
    double clamp_value = 0.99;

    double upper() const { return 1.0 - delta; }
    void validate() const;
};

struct SolverResult {
    double eta_hat = 0.0;
    double sigma2_hat = 0.0;
    double loglik = 0.0;
    std::vector<int> iterations_per_start;
    std::vector<bool> converged;
    std::vector<double> start_estimates;
    std::size_t chosen_start = 0;
    bool clamped = false;
    // True when no start passed the grid check and the grid argmax was
    // polished instead.
    bool grid_fallback = false;

    int iterations() const;
};

// Multi-start Newton-Raphson on L_n over [0, 1 - delta]. Each iterate is
// clamped into the interval. A run that ends pinned at the upper bound reports
// cfg.clamp_value. When runs disagree, the estimate farthest from the
// boundaries (min(eta, clamp_value - eta)) wins, then the higher L_n, then the
// lower start index. The result is checked against a 1e-3 grid.
SolverResult newton_estimate(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot,
                             const SolverConfig& cfg = {});

// Brute-force argmax of L_n over {0, step, 2 step, ...} up to 1 - delta; the
// lowest eta wins ties.
double grid_oracle(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot, double grid_step,
                   double delta = 0.01);

} // namespace herit
