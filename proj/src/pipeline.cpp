#include "herit/pipeline.hpp"

#include "herit/error.hpp"

namespace herit {

EstimateReport estimate(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                        const std::optional<Eigen::MatrixXd>& covariates, const EstimateOptions& opts)
{
    opts.solver.validate();
    if (y.size() != z.rows())
        throw ShapeError("phenotype has " + std::to_string(y.size()) + " rows but genotypes have " +
                         std::to_string(z.rows()));
    if (y.squaredNorm() == 0.0) throw DegenerateData("phenotype is identically zero");
    if (!y.allFinite()) throw DegenerateData("phenotype contains non-finite values");

    DecomposeOptions dopt;
    dopt.project_intercept = opts.project_intercept;
    dopt.covariates = covariates;
    const SpectralDecomposition sd = decompose(z, y, dopt);
    if (sd.y_rot.norm() <= 1e-12 * y.norm())
        throw DegenerateData("phenotype lies entirely in the span of the intercept/covariates");
    const SolverResult sr = newton_estimate(sd.lambdas, sd.y_rot, opts.solver);
    return make_report(sd, sr, opts.q, opts.level);
}

GenotypeEstimate estimate(const GenotypeMatrix& w, const Eigen::VectorXd& y,
                          const std::optional<Eigen::MatrixXd>& covariates, const EstimateOptions& opts)
{
    if (y.size() != w.entries.rows())
        throw ShapeError("phenotype has " + std::to_string(y.size()) + " rows but genotypes have " +
                         std::to_string(w.entries.rows()));
    StandardizedDesign d = standardize(w, opts.policy);
    if (d.markers() == 0) throw DegenerateData("no polymorphic markers left after dropping monomorphic columns");
    GenotypeEstimate out{estimate(d.z, y, covariates, opts), d.dropped};
    return out;
}

} // namespace herit
