#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "herit/error.hpp"
#include "herit/inference.hpp"
#include "herit/likelihood.hpp"
#include "fixtures.hpp"

using namespace herit;

TEST_CASE("g")
{
    for (double eta : {0.0, 0.3, 0.9}) CHECK(g(eta, 1.0) == 0.0);
    for (double l : {0.0, 0.5, 3.0}) CHECK(g(0.0, l) == l - 1.0);
    CHECK(g(0.5, 3.0) == 1.0);
    CHECK(g(0.5, 0.0) == doctest::Approx(-2.0));
}

TEST_CASE("profile sigma2 and loglik on small cases")
{
    const Eigen::Vector2d l(2.0, 0.0), y(1.0, 1.0);
    CHECK(profile_sigma2(0.5, l, y) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    // Independent arithmetic: -log(4/3) - (log 1.5 + log 0.5) / 2.
    const double want = -std::log(4.0 / 3.0) - 0.5 * (std::log(1.5) + std::log(0.5));
    CHECK(loglik(0.5, l, y) == doctest::Approx(want).epsilon(1e-15));
    CHECK(want == doctest::Approx(-0.143841036225890).epsilon(1e-13));

    const Eigen::Vector3d l3(0.2, 1.3, 1.5), y3(0.5, -2.0, 1.0);
    const double m = y3.squaredNorm() / 3.0;
    CHECK(profile_sigma2(0.0, l3, y3) == doctest::Approx(m));
    CHECK(loglik(0.0, l3, y3) == doctest::Approx(-std::log(m)));

    const Eigen::Vector3d ones = Eigen::Vector3d::Ones();
    for (double eta : {0.0, 0.2, 0.7, 0.98}) {
        CHECK(profile_sigma2(eta, ones, y3) == doctest::Approx(m));
        CHECK(loglik(eta, ones, y3) == doctest::Approx(-std::log(m)));
        CHECK(dloglik(eta, ones, y3) == 0.0);
        CHECK(d2loglik(eta, ones, y3) == 0.0);
    }
}

TEST_CASE("input errors")
{
    const Eigen::Vector2d l(2.0, 0.0);
    CHECK_THROWS_AS(loglik(0.5, l, Eigen::Vector2d::Zero()), DegenerateData);
    CHECK_THROWS_AS(profile_sigma2(0.5, l, Eigen::Vector2d::Zero()), DegenerateData);
    CHECK_THROWS_AS(loglik(0.5, l, Eigen::Vector3d::Ones()), ShapeError);
    CHECK_THROWS_AS(loglik(1.0, l, Eigen::Vector2d::Ones()), ConfigError);
    CHECK_THROWS_AS(newton_estimate(Eigen::Vector3d::Ones(), Eigen::Vector3d(1, 2, 3)), UnidentifiableModel);
    SolverConfig bad;
    bad.inits = {0.995};
    CHECK_THROWS_AS(newton_estimate(l, Eigen::Vector2d::Ones(), bad), ConfigError);
    CHECK_THROWS_AS(grid_oracle(l, Eigen::Vector2d::Ones(), 0.02), ConfigError);
}

TEST_CASE("derivatives match central finite differences")
{
    Rng rng(2718);
    for (int k = 0; k < 100; ++k) {
        const auto in = fixtures::random_instance(rng);
        const double h1 = 1e-6, h2 = 1e-4;
        const auto L = [&](double e) { return loglik(e, in.lambdas, in.y); };
        const double fd1 = (L(in.eta + h1) - L(in.eta - h1)) / (2.0 * h1);
        const double fd2 = (L(in.eta + h2) - 2.0 * L(in.eta) + L(in.eta - h2)) / (h2 * h2);
        CAPTURE(k);
        CHECK(fixtures::rel_err(dloglik(in.eta, in.lambdas, in.y), fd1) < 1e-4);
        CHECK(fixtures::rel_err(d2loglik(in.eta, in.lambdas, in.y), fd2) < 1e-3);
    }
}

TEST_CASE("denominator stays positive for lambda >= 0")
{
    Rng rng(4);
    for (int k = 0; k < 10000; ++k) {
        const double eta = rng.uniform(0.0, 0.999);
        const double l = rng.uniform(0.0, 50.0);
        CHECK(eta * (l - 1.0) + 1.0 >= std::min(1.0 - eta, 1.0));
    }
}

TEST_CASE("grid oracle")
{
    SUBCASE("constant likelihood returns the first grid point")
    {
        CHECK(grid_oracle(Eigen::Vector3d::Ones(), Eigen::Vector3d(1, 2, 3), 1e-3) == 0.0);
    }
    SUBCASE("increasing likelihood returns the last grid point")
    {
        // Data concentrated on the large eigenvalue: L_n increases up to 1 - delta.
        const Eigen::Vector2d l(2.0, 0.0), y(10.0, 0.01);
        const auto L = [&](double e) { return loglik(e, l, y); };
        for (double e = 0.0; e < 0.98; e += 0.01) REQUIRE(L(e + 0.01) > L(e));
        CHECK(grid_oracle(l, y, 1e-3) == doctest::Approx(0.99).epsilon(1e-12));
        CHECK(grid_oracle(l, y, 0.007) == doctest::Approx(0.987).epsilon(1e-12));
    }
}

TEST_CASE("boundary-pinned instance reports 0.99")
{
    const Eigen::Vector2d l(2.0, 0.0), y(10.0, 0.01);
    const auto r = newton_estimate(l, y);
    CHECK(r.eta_hat == 0.99);
    CHECK(r.clamped);
    CHECK(r.sigma2_hat == profile_sigma2(0.99, l, y));

    SolverConfig wide;
    wide.delta = 0.05;
    wide.inits = {0.1, 0.5, 0.9};
    const auto w = newton_estimate(l, y, wide);
    CHECK(w.eta_hat == 0.99);
    CHECK(w.clamped);
}

TEST_CASE("lower boundary")
{
    // Data concentrated on the small eigenvalue: L_n decreases from 0.
    const Eigen::Vector2d l(2.0, 0.0), y(0.01, 10.0);
    const auto r = newton_estimate(l, y);
    CHECK(r.eta_hat == 0.0);
    CHECK_FALSE(r.clamped);
}

TEST_CASE("Newton agrees with the grid and is a grid maximum")
{
    const double etas[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    const double as[] = {0.1, 0.5, 1.0};
    int k = 0;
    for (double e : etas)
        for (double a : as) {
            const auto sd = fixtures::simulated(e, a, 150, 1.0, 1000 + k++);
            const auto r = newton_estimate(sd.lambdas, sd.y_rot);
            const double grid = grid_oracle(sd.lambdas, sd.y_rot, 1e-4);
            CAPTURE(e);
            CAPTURE(a);
            CHECK(r.eta_hat >= 0.0);
            CHECK(r.eta_hat <= 0.99);
            CHECK(std::abs(r.eta_hat - grid) < 2e-4);
            CHECK(r.sigma2_hat == profile_sigma2(r.eta_hat, sd.lambdas, sd.y_rot));
            const double best = loglik(std::min(r.eta_hat, 0.99), sd.lambdas, sd.y_rot);
            for (int j = 0; j <= 990; ++j) REQUIRE(loglik(j * 1e-3, sd.lambdas, sd.y_rot) <= best + 1e-9);
            if (r.eta_hat > 1e-3 && r.eta_hat < 0.989) CHECK(std::abs(dloglik(r.eta_hat, sd.lambdas, sd.y_rot)) < 1e-6);
        }
}

TEST_CASE("scale invariance and permutation invariance")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto sd = fixtures::simulated(0.2 + 0.06 * seed, 0.5, 120, 1.0, seed);
        const auto base = newton_estimate(sd.lambdas, sd.y_rot);
        for (double c : {1e-3, 0.5, 7.0, 1e3}) {
            const auto s = newton_estimate(sd.lambdas, c * sd.y_rot);
            CHECK(std::abs(s.eta_hat - base.eta_hat) < 1e-8);
            CHECK(fixtures::rel_err(s.sigma2_hat, c * c * base.sigma2_hat) < 1e-10);
            CHECK(std::abs(loglik(0.4, sd.lambdas, c * sd.y_rot) - (loglik(0.4, sd.lambdas, sd.y_rot) - std::log(c * c))) <
                  1e-10);
            CHECK(fixtures::rel_err(d2loglik(0.4, sd.lambdas, c * sd.y_rot), d2loglik(0.4, sd.lambdas, sd.y_rot)) <
                  1e-10);
        }
        std::vector<Eigen::Index> idx(sd.lambdas.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(seed);
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.next_u64() % (i + 1)]);
        Eigen::VectorXd lp(idx.size()), yp(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            lp(i) = sd.lambdas(idx[i]);
            yp(i) = sd.y_rot(idx[i]);
        }
        CHECK(fixtures::rel_err(loglik(0.3, lp, yp), loglik(0.3, sd.lambdas, sd.y_rot)) < 1e-12);
        CHECK(std::abs(newton_estimate(lp, yp).eta_hat - base.eta_hat) < 1e-8);
    }
}

TEST_CASE("second derivative at the estimate")
{
    const auto sd = fixtures::simulated(0.5, 0.5, 500, 1.0, 77);
    const auto r = newton_estimate(sd.lambdas, sd.y_rot);
    const double d2 = d2loglik(r.eta_hat, sd.lambdas, sd.y_rot);
    CHECK(d2 < 0.0);
    // The curvature does not carry the phenotype scale: it tracks -gamma_n^2
    // whatever sigma*^2 the data were drawn with.
    const auto big = fixtures::simulated(0.5, 0.5, 500, 1.0, 77, DesignKind::Genotype, 9.0);
    const auto rb = newton_estimate(big.lambdas, big.y_rot);
    CHECK(std::abs(rb.eta_hat - r.eta_hat) < 1e-8);
    CHECK(fixtures::rel_err(d2loglik(rb.eta_hat, big.lambdas, big.y_rot), d2) < 1e-8);
    MESSAGE("curvature " << -d2 << " vs gamma_n^2 " << gamma_n2(r.eta_hat, sd.lambdas));
    CHECK(fixtures::rel_err(-d2, gamma_n2(r.eta_hat, sd.lambdas)) < 0.3);
}

TEST_CASE("null heritability stays near zero")
{
    // SE at eta = 0 for n = 200, a = 0.5 is about 0.14, so eta_hat < 0.1 has
    // probability near Phi(0.71) = 0.76 with half the mass exactly at 0.
    int below = 0, zero = 0;
    const int reps = 200;
    for (int k = 0; k < reps; ++k) {
        const auto sd = fixtures::simulated(0.0, 0.5, 200, 1.0, 5000 + k);
        const auto r = newton_estimate(sd.lambdas, sd.y_rot);
        below += r.eta_hat < 0.1 ? 1 : 0;
        zero += r.eta_hat == 0.0 ? 1 : 0;
    }
    MESSAGE("null: eta_hat < 0.1 in " << below << "/200, at 0 in " << zero << "/200");
    CHECK(below >= 0.65 * reps);
    CHECK(zero >= 0.35 * reps);
    CHECK(zero <= 0.65 * reps);
}
