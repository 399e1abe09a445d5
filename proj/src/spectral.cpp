#include "herit/spectral.hpp"

#include <algorithm>
#include <numeric>

namespace herit {

namespace {

StandardizedDesign standardize_columns(const Eigen::MatrixXd& w, MonomorphicPolicy policy)
{
    const Eigen::Index n = w.rows();
    if (n < 2) throw ConfigError("standardize: need at least 2 individuals");
    const double nd = static_cast<double>(n);

    std::vector<std::size_t> kept;
    std::vector<std::size_t> dropped;
    Eigen::VectorXd mean(w.cols());
    Eigen::VectorXd sd(w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        mean(j) = w.col(j).sum() / nd;
        sd(j) = std::sqrt((w.col(j).array() - mean(j)).square().sum() / nd);
        // Relative to the column scale so Gaussian and 0/1/2 inputs behave alike.
        const double scale = std::max(1.0, w.col(j).cwiseAbs().maxCoeff());
        if (!(sd(j) > 1e-12 * scale))
            dropped.push_back(static_cast<std::size_t>(j));
        else
            kept.push_back(static_cast<std::size_t>(j));
    }
    if (!dropped.empty() && policy == MonomorphicPolicy::Error) throw MonomorphicColumn(dropped);

    StandardizedDesign d;
    d.z.resize(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(kept[k]);
        d.z.col(static_cast<Eigen::Index>(k)) = (w.col(j).array() - mean(j)) / sd(j);
    }
    d.kept = std::move(kept);
    d.dropped = std::move(dropped);
    return d;
}

} // namespace

StandardizedDesign standardize(const GenotypeMatrix& w, MonomorphicPolicy policy)
{
    w.validate();
    return standardize_columns(w.entries.cast<double>(), policy);
}

StandardizedDesign standardize(const Eigen::MatrixXd& w, MonomorphicPolicy policy)
{
    return standardize_columns(w, policy);
}

namespace {

// Orthonormal basis (n x n) whose first p columns span X; throws when X is
// rank deficient.
Eigen::MatrixXd covariate_basis(const Eigen::MatrixXd& x)
{
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (p >= n)
        throw RankDeficientCovariates("covariates: need fewer columns (" + std::to_string(p) + ") than rows (" +
                                      std::to_string(n) + ")");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
        throw RankDeficientCovariates("covariates: matrix has rank " + std::to_string(qr.rank()) + " < " +
                                      std::to_string(p) + " columns");
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

Eigen::VectorXd residualize(const Eigen::VectorXd& y, const Eigen::MatrixXd& x)
{
    if (x.rows() != y.size())
        throw ShapeError("residualize: covariates have " + std::to_string(x.rows()) + " rows, phenotype has " +
                         std::to_string(y.size()));
    const Eigen::MatrixXd q = covariate_basis(x);
    const auto span = q.leftCols(x.cols());
    return y - span * (span.transpose() * y);
}

Eigen::MatrixXd kinship(const Eigen::MatrixXd& z)
{
    if (z.cols() < 1) throw ShapeError("kinship: design has no columns");
    const Eigen::Index n = z.rows();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    r.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0 / static_cast<double>(z.cols()));
    return r.selfadjointView<Eigen::Lower>();
}

EigenPairs eigendecompose(const Eigen::MatrixXd& r)
{
    if (r.rows() != r.cols()) throw ShapeError("eigendecompose: matrix is not square");
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ShapeError("eigendecompose: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigendecompose: eigensolver did not converge");

    const Eigen::Index n = r.rows();
    EigenPairs out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending order.
    for (Eigen::Index k = 0; k < n; ++k) {
        double v = es.eigenvalues()(n - 1 - k);
        if (v < 0.0 && v > -kEigenClampTolerance) v = 0.0;
        out.values(k) = v;
        out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    return out;
}

Eigen::VectorXd rotate(const Eigen::MatrixXd& u, const Eigen::VectorXd& y)
{
    if (u.rows() != y.size())
        throw ShapeError("rotate: basis has " + std::to_string(u.rows()) + " rows, vector has " +
                         std::to_string(y.size()));
    return u.transpose() * y;
}

double esd(const Eigen::VectorXd& lambdas, double x)
{
    if (lambdas.size() == 0) return 0.0;
    const auto count = (lambdas.array() <= x).count();
    return static_cast<double>(count) / static_cast<double>(lambdas.size());
}

MPLaw::MPLaw(double ratio) : a(ratio)
{
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ConfigError("Marchenko-Pastur ratio must be positive");
    const double r = std::sqrt(ratio);
    a_minus = (1.0 - r) * (1.0 - r);
    a_plus = (1.0 + r) * (1.0 + r);
    mass_at_zero = std::max(0.0, 1.0 - 1.0 / ratio);
}

double mp_cdf(const MPLaw& law, double x)
{
    if (x < 0.0) return 0.0;
    double total = law.mass_at_zero;
    if (x <= law.a_minus) return total;
    // Integrate the smooth theta-form over [0, theta_x].
    double theta_x = M_PI;
    if (x < law.a_plus) {
        const double c = (1.0 + law.a - x) / (2.0 * std::sqrt(law.a));
        theta_x = std::acos(std::clamp(c, -1.0, 1.0));
    }
    const GaussLegendre& rule = gauss_legendre(kMpQuadratureOrder);
    double part = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double theta = 0.5 * theta_x * (rule.nodes[k] + 1.0);
        double lambda = 0.0;
        part += rule.weights[k] * detail::mp_theta_weight(law, theta, lambda);
    }
    part *= 0.5 * theta_x;
    if (!std::isfinite(part)) throw NumericalFailure("mp_cdf: quadrature failed");
    return std::clamp(total + part, 0.0, 1.0);
}

SpectralDecomposition decompose(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const DecomposeOptions& opts)
{
    const Eigen::Index n = z.rows();
    if (y.size() != n)
        throw ShapeError("phenotype has " + std::to_string(y.size()) + " entries but design has " +
                         std::to_string(n) + " rows");
    if (z.cols() < 1) throw ShapeError("design has no columns");

    // Columns to project out: the intercept (unless X already spans it) and X.
    Eigen::MatrixXd x(n, 0);
    if (opts.covariates) {
        if (opts.covariates->rows() != n)
            throw ShapeError("covariates have " + std::to_string(opts.covariates->rows()) +
                             " rows but design has " + std::to_string(n));
        x = *opts.covariates;
    }
    if (opts.project_intercept) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        bool spanned = false;
        if (x.cols() > 0 && x.cols() < n) {
            const Eigen::VectorXd res = residualize(ones, x);
            spanned = res.norm() < 1e-8 * std::sqrt(static_cast<double>(n));
        }
        if (!spanned) {
            Eigen::MatrixXd with_ones(n, x.cols() + 1);
            with_ones << ones, x;
            x = std::move(with_ones);
        }
    }

    const Eigen::MatrixXd r = kinship(z);
    SpectralDecomposition out;
    out.n_obs = static_cast<std::size_t>(n);
    out.n_markers = static_cast<std::size_t>(z.cols());
    out.a = static_cast<double>(n) / static_cast<double>(z.cols());
    out.projected = static_cast<std::size_t>(x.cols());

    if (x.cols() == 0) {
        EigenPairs ep = eigendecompose(r);
        out.lambdas = std::move(ep.values);
        out.y_rot = rotate(ep.vectors, y);
        if (opts.keep_eigvecs) out.eigvecs = std::move(ep.vectors);
        return out;
    }

    const Eigen::MatrixXd basis = covariate_basis(x);
    const auto complement = basis.rightCols(n - x.cols());
    const Eigen::MatrixXd reduced = complement.transpose() * r * complement;
    EigenPairs ep = eigendecompose(0.5 * (reduced + reduced.transpose()));
    out.lambdas = std::move(ep.values);
    Eigen::MatrixXd u = complement * ep.vectors;
    out.y_rot = rotate(u, y);
    if (opts.keep_eigvecs) out.eigvecs = std::move(u);
    return out;
}

} // namespace herit
