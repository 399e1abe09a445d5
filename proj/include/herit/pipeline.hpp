#pragma once

#include <optional>

#include <Eigen/Dense>

#include "herit/inference.hpp"
#include "herit/spectral.hpp"

namespace herit {

struct EstimateOptions {
    SolverConfig solver;
    std::optional<double> q; // assumed sparsity; never estimated
    double level = 0.95;
    MonomorphicPolicy policy = MonomorphicPolicy::Error;
    bool project_intercept = true;
};

// Kinship spectrum -> rotation -> Newton -> standard errors, for a design that
// is already standardized. Covariates (and the intercept) are projected out.
EstimateReport estimate(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                        const std::optional<Eigen::MatrixXd>& covariates, const EstimateOptions& opts);

struct GenotypeEstimate {
    EstimateReport report;
    std::vector<std::size_t> dropped_columns;
};

// Standardizes W under opts.policy first.
GenotypeEstimate estimate(const GenotypeMatrix& w, const Eigen::VectorXd& y,
                          const std::optional<Eigen::MatrixXd>& covariates, const EstimateOptions& opts);

} // namespace herit
