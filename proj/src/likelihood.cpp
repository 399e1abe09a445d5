#include "herit/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "herit/error.hpp"

namespace herit {

namespace {

void check_inputs(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    if (lambdas.size() != y_rot.size())
        throw ShapeError("likelihood: " + std::to_string(lambdas.size()) + " eigenvalues but " +
                         std::to_string(y_rot.size()) + " rotated observations");
    if (lambdas.size() == 0) throw ShapeError("likelihood: empty spectrum");
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("likelihood: eta must lie in [0, 1)");
    if (y_rot.squaredNorm() == 0.0) throw DegenerateData("rotated observations are identically zero");
}

double denominator(double eta, double lambda)
{
    const double d = eta * (lambda - 1.0) + 1.0;
    if (!(d > 0.0)) throw NumericalFailure("likelihood: non-positive denominator eta (lambda - 1) + 1");
    return d;
}

struct Moments {
    double a = 0.0;  // mean y^2 / d
    double c = 0.0;  // mean y^2 (l - 1) / d^2
    double e = 0.0;  // mean y^2 (l - 1)^2 / d^3
    double g2 = 0.0; // mean ((l - 1) / d)^2
    double g1 = 0.0; // mean (l - 1) / d
};

Moments moments(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    Moments m;
    const auto n = lambdas.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lm1 = lambdas(i) - 1.0;
        const double d = denominator(eta, lambdas(i));
        const double y2 = y_rot(i) * y_rot(i);
        const double gi = lm1 / d;
        m.a += y2 / d;
        m.c += y2 * gi / d;
        m.e += y2 * gi * gi / d;
        m.g1 += gi;
        m.g2 += gi * gi;
    }
    const double nd = static_cast<double>(n);
    m.a /= nd;
    m.c /= nd;
    m.e /= nd;
    m.g1 /= nd;
    m.g2 /= nd;
    return m;
}

double loglik_unchecked(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    double a = 0.0, logs = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const double d = denominator(eta, lambdas(i));
        a += y_rot(i) * y_rot(i) / d;
        logs += std::log(d);
    }
    const double nd = static_cast<double>(lambdas.size());
    return -std::log(a / nd) - logs / nd;
}

} // namespace

double g(double eta, double lambda)
{
    const double lm1 = lambda - 1.0;
    return lm1 / (eta * lm1 + 1.0);
}

double profile_sigma2(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    check_inputs(eta, lambdas, y_rot);
    double a = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) a += y_rot(i) * y_rot(i) / denominator(eta, lambdas(i));
    return a / static_cast<double>(lambdas.size());
}

double loglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    check_inputs(eta, lambdas, y_rot);
    return loglik_unchecked(eta, lambdas, y_rot);
}

double dloglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    check_inputs(eta, lambdas, y_rot);
    const Moments m = moments(eta, lambdas, y_rot);
    return m.c / m.a - m.g1;
}

double d2loglik(double eta, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot)
{
    check_inputs(eta, lambdas, y_rot);
    const Moments m = moments(eta, lambdas, y_rot);
    return -2.0 * m.e / m.a + (m.c / m.a) * (m.c / m.a) + m.g2;
}

void SolverConfig::validate() const
{
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("solver: delta must lie in (0, 0.5)");
    if (inits.empty()) throw ConfigError("solver: at least one initial value is required");
    for (double s : inits)
        if (!(s > 0.0 && s < upper())) throw ConfigError("solver: initial values must lie in (0, 1 - delta)");
    if (max_iter < 1) throw ConfigError("solver: max_iter must be positive");
    if (!(tol > 0.0)) throw ConfigError("solver: tol must be positive");
    if (!(clamp_value > 0.0 && clamp_value < 1.0)) throw ConfigError("solver: clamp_value must lie in (0, 1)");
}

int SolverResult::iterations() const
{
    return chosen_start < iterations_per_start.size() ? iterations_per_start[chosen_start] : 0;
}

double grid_oracle(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot, double grid_step, double delta)
{
    if (!(grid_step > 0.0 && grid_step <= 0.01)) throw ConfigError("grid_oracle: grid_step must lie in (0, 0.01]");
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("grid_oracle: delta must lie in (0, 0.5)");
    check_inputs(0.0, lambdas, y_rot);
    const auto steps = static_cast<long>(std::floor((1.0 - delta) / grid_step + 1e-9));
    double best_eta = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (long k = 0; k <= steps; ++k) {
        const double eta = static_cast<double>(k) * grid_step;
        const double v = loglik_unchecked(eta, lambdas, y_rot);
        if (v > best) {
            best = v;
            best_eta = eta;
        }
    }
    return best_eta;
}

namespace {

struct Run {
    double end = 0.0;      // last iterate in [0, upper]
    double estimate = 0.0; // reported value (clamp_value when pinned high)
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool finite = false;
    bool local_max = false;
    bool pinned_high = false;
};

Run newton_run(double start, const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot, const SolverConfig& cfg,
               double lo, double hi)
{
    Run run;
    double eta = start;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const Moments m = moments(eta, lambdas, y_rot);
        const double d1 = m.c / m.a - m.g1;
        const double d2 = -2.0 * m.e / m.a + (m.c / m.a) * (m.c / m.a) + m.g2;
        if (!std::isfinite(d1) || !std::isfinite(d2)) return run;
        double next;
        if (d2 != 0.0)
            next = eta - d1 / d2;
        else
            next = d1 > 0.0 ? hi : lo;
        if (!std::isfinite(next)) next = (d1 > 0.0) ? hi : lo;
        next = std::clamp(next, lo, hi);
        const double moved = next - eta;
        eta = next;
        run.iterations = it + 1;
        if (std::abs(moved) < cfg.tol) {
            run.converged = true;
            break;
        }
    }
    run.end = eta;
    run.value = loglik_unchecked(eta, lambdas, y_rot);
    run.finite = std::isfinite(run.value);
    if (!run.finite) return run;

    const Moments m = moments(eta, lambdas, y_rot);
    const double d1 = m.c / m.a - m.g1;
    const double d2 = -2.0 * m.e / m.a + (m.c / m.a) * (m.c / m.a) + m.g2;
    const double edge = 1e-12;
    if (eta >= hi - edge)
        run.local_max = d1 >= 0.0 || (run.converged && d2 < 0.0);
    else if (eta <= lo + edge)
        run.local_max = d1 <= 0.0 || (run.converged && d2 < 0.0);
    else
        run.local_max = run.converged && d2 < 0.0;
    return run;
}

} // namespace

SolverResult newton_estimate(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& y_rot, const SolverConfig& cfg)
{
    cfg.validate();
    check_inputs(0.0, lambdas, y_rot);
    const double lmin = lambdas.minCoeff();
    const double lmax = lambdas.maxCoeff();
    if (lmax - lmin <= 1e-12 * std::max(1.0, std::abs(lmax)))
        throw UnidentifiableModel("all eigenvalues are equal: the profile likelihood is constant in eta");

    const double hi = cfg.upper();
    const double edge = 1e-12;
    std::vector<Run> runs;
    runs.reserve(cfg.inits.size());
    for (double s : cfg.inits) {
        Run r = newton_run(s, lambdas, y_rot, cfg, 0.0, hi);
        r.pinned_high = r.end >= hi - edge;
        r.estimate = r.pinned_high ? cfg.clamp_value : r.end;
        runs.push_back(r);
    }
    if (std::none_of(runs.begin(), runs.end(), [](const Run& r) { return r.finite; }))
        throw NumericalFailure("newton_estimate: no start produced a finite likelihood");

    SolverResult res;
    for (const Run& r : runs) {
        res.iterations_per_start.push_back(r.iterations);
        res.converged.push_back(r.converged);
        res.start_estimates.push_back(r.estimate);
    }

    // Farthest from the boundaries, then higher L_n, then lower index.
    std::size_t chosen = runs.size();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const Run& r = runs[i];
        if (!r.local_max) continue;
        if (chosen == runs.size()) {
            chosen = i;
            continue;
        }
        const Run& c = runs[chosen];
        const double dist_r = std::min(r.estimate, cfg.clamp_value - r.estimate);
        const double dist_c = std::min(c.estimate, cfg.clamp_value - c.estimate);
        if (dist_r > dist_c + 1e-9 || (std::abs(dist_r - dist_c) <= 1e-9 && r.value > c.value + 1e-12))
            chosen = i;
    }

    // Grid check on [0, 1 - delta] with step 1e-3.
    const double grid_step = 1e-3;
    const auto steps = static_cast<long>(std::floor(hi / grid_step + 1e-9));
    double grid_best = -std::numeric_limits<double>::infinity();
    double grid_eta = 0.0;
    for (long k = 0; k <= steps; ++k) {
        const double eta = std::min(static_cast<double>(k) * grid_step, hi);
        const double v = loglik_unchecked(eta, lambdas, y_rot);
        if (v > grid_best) {
            grid_best = v;
            grid_eta = eta;
        }
    }

    double end = 0.0;
    bool pinned = false;
    if (chosen < runs.size() && runs[chosen].value >= grid_best - 1e-6) {
        end = runs[chosen].end;
        pinned = runs[chosen].pinned_high;
        res.chosen_start = chosen;
    } else {
        // Polish the grid argmax inside its neighbouring cells.
        const double lo_b = std::max(0.0, grid_eta - grid_step);
        const double hi_b = std::min(hi, grid_eta + grid_step);
        SolverConfig local = cfg;
        Run r = newton_run(grid_eta, lambdas, y_rot, local, lo_b, hi_b);
        end = (r.finite && r.value >= grid_best) ? r.end : grid_eta;
        pinned = end >= hi - edge;
        res.grid_fallback = true;
        res.chosen_start = chosen < runs.size() ? chosen : 0;
    }

    res.clamped = pinned;
    res.eta_hat = pinned ? cfg.clamp_value : end;
    res.loglik = loglik_unchecked(pinned ? hi : end, lambdas, y_rot);
    res.sigma2_hat = profile_sigma2(res.eta_hat, lambdas, y_rot);
    return res;
}

} // namespace herit
