#include "herit/inference.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "herit/error.hpp"

namespace herit {

double gamma_n2(double eta, const Eigen::VectorXd& lambdas)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("gamma_n2: eta must lie in [0, 1)");
    if (lambdas.size() == 0) return 0.0;
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const double gi = g(eta, lambdas(i));
        s1 += gi;
        s2 += gi * gi;
    }
    const double nd = static_cast<double>(lambdas.size());
    const double m = s1 / nd;
    return std::max(0.0, s2 / nd - m * m);
}

double gamma2_limit(double a, double eta)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("gamma2_limit: eta must lie in [0, 1)");
    const MPLaw law(a);
    const double m1 = mp_integrate(law, [eta](double l) { return g(eta, l); });
    const double m2 = mp_integrate(law, [eta](double l) {
        const double v = g(eta, l);
        return v * v;
    });
    return std::max(0.0, m2 - m1 * m1);
}

double se_q1(double gamma_n2, std::size_t n)
{
    if (!(gamma_n2 > 0.0)) throw UnidentifiableModel("se_q1: gamma_n2 is zero, the spectrum carries no information");
    if (n == 0) throw ConfigError("se_q1: n must be positive");
    return std::sqrt(2.0 / (static_cast<double>(n) * gamma_n2));
}

namespace {

double s_from_means(double m_llm1, double m_l, double m_g)
{
    const double inner = m_llm1 - m_l * m_g;
    return inner * inner;
}

} // namespace

double s_empirical(double eta, const Eigen::VectorXd& lambdas)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("s_empirical: eta must lie in [0, 1)");
    if (lambdas.size() == 0) return 0.0;
    double a = 0.0, b = 0.0, c = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const double l = lambdas(i);
        const double d = eta * (l - 1.0) + 1.0;
        a += l * (l - 1.0) / (d * d);
        b += l / d;
        c += (l - 1.0) / d;
    }
    const double nd = static_cast<double>(lambdas.size());
    return s_from_means(a / nd, b / nd, c / nd);
}

double s_limit(double a, double eta)
{
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("s_limit: eta must lie in [0, 1)");
    const MPLaw law(a);
    const auto d = [eta](double l) { return eta * (l - 1.0) + 1.0; };
    const double m_llm1 = mp_integrate(law, [&](double l) { return l * (l - 1.0) / (d(l) * d(l)); });
    const double m_l = mp_integrate(law, [&](double l) { return l / d(l); });
    const double m_g = mp_integrate(law, [&](double l) { return (l - 1.0) / d(l); });
    return s_from_means(m_llm1, m_l, m_g);
}

double tau2(double a, double eta, double q, double gamma2, double s)
{
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("tau2: q must lie in (0, 1]");
    if (!(s >= 0.0)) throw ConfigError("tau2: S must be non-negative");
    if (!(gamma2 > 0.0)) throw UnidentifiableModel("tau2: gamma^2 is zero");
    const double base = 2.0 / gamma2;
    if (q == 1.0 || eta == 0.0) return base;
    return base + 3.0 * a * a * eta * eta / (gamma2 * gamma2) * (1.0 / q - 1.0) * s;
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval confidence_interval(double eta_hat, double se, double level)
{
    if (!(se >= 0.0)) throw ConfigError("confidence_interval: se must be non-negative");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence_interval: level must lie in (0, 1)");
    const double z = normal_quantile(0.5 * (1.0 + level));
    return {std::clamp(eta_hat - z * se, 0.0, 1.0), std::clamp(eta_hat + z * se, 0.0, 1.0)};
}

QuadFormVariance var_quadform(const Eigen::VectorXd& h, const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& v,
                              double eta, double sigma2, double q)
{
    const Eigen::Index n = lambdas.size();
    if (h.size() != n) throw ShapeError("var_quadform: H and the spectrum differ in size");
    if (v.cols() < n) throw ShapeError("var_quadform: V needs at least n columns");
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("var_quadform: eta must lie in [0, 1)");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("var_quadform: q must lie in (0, 1]");

    const double s4 = sigma2 * sigma2;
    const Eigen::ArrayXd dh = lambdas.array() * h.array();
    const Eigen::ArrayXd cov = (1.0 - eta) + eta * lambdas.array();
    const double gaussian = 2.0 * s4 * (h.array().square() * cov.square()).sum();

    // M = V_n diag(D H) V_n', so M_ii = sum_k V_ik^2 (D H)_k.
    const Eigen::VectorXd mdiag = v.leftCols(n).array().square().matrix() * dh.matrix();
    const double sparse_factor = 3.0 * s4 * eta * eta * (1.0 / q - 1.0);
    return {gaussian + sparse_factor * mdiag.squaredNorm(), gaussian + sparse_factor * dh.square().sum()};
}

EstimateReport make_report(const SpectralDecomposition& sd, const SolverResult& sr, std::optional<double> q,
                           double level)
{
    if (q && !(*q > 0.0 && *q <= 1.0)) throw ConfigError("assumed q must lie in (0, 1]");
    EstimateReport rep;
    rep.eta_hat = sr.eta_hat;
    rep.sigma2_hat = sr.sigma2_hat;
    rep.a = sd.a;
    rep.n = sd.n_obs;
    rep.n_effective = sd.n_effective();
    rep.markers = sd.n_markers;
    rep.projected = sd.projected;
    rep.solver = sr;
    rep.ci_level = level;

    rep.gamma_n2 = gamma_n2(sr.eta_hat, sd.lambdas);
    rep.se_q1 = se_q1(rep.gamma_n2, rep.n_effective);
    if (q) {
        rep.q_assumed = *q;
        rep.s_n = s_empirical(sr.eta_hat, sd.lambdas);
        rep.tau_n2 = tau2(sd.a, sr.eta_hat, *q, rep.gamma_n2, *rep.s_n);
        rep.se_sparse = std::sqrt(*rep.tau_n2 / static_cast<double>(rep.n_effective));
    }
    const Interval ci = confidence_interval(rep.eta_hat, rep.se(), level);
    rep.ci_lo = ci.lo;
    rep.ci_hi = ci.hi;
    return rep;
}

} // namespace herit
