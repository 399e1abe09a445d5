#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "herit/spectral.hpp"
#include "herit/synth.hpp"

using namespace herit;

namespace {

Eigen::MatrixXd random_z(std::size_t n, std::size_t N, std::uint64_t seed)
{
    Rng rng(seed);
    return standardize(sample_gaussian_design(n, N, rng), MonomorphicPolicy::Error).z;
}

Eigen::MatrixXd random_genotype_z(std::size_t n, std::size_t N, std::uint64_t seed)
{
    Rng rng(seed);
    const auto p = sample_allele_frequencies(N, 0.1, 0.5, rng);
    return standardize(sample_polymorphic_genotypes(n, p, rng), MonomorphicPolicy::Error).z;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index n, Rng& rng)
{
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

TEST_CASE("standardize a symmetric three-point column")
{
    GenotypeMatrix w;
    w.entries.resize(3, 1);
    w.entries << 0, 1, 2;
    const auto d = standardize(w, MonomorphicPolicy::Error);
    const double r = std::sqrt(1.5);
    CHECK(d.z(0, 0) == doctest::Approx(-r).epsilon(1e-15));
    CHECK(d.z(1, 0) == 0.0);
    CHECK(d.z(2, 0) == doctest::Approx(r).epsilon(1e-15));
}

TEST_CASE("monomorphic columns")
{
    GenotypeMatrix w;
    w.entries.resize(4, 4);
    w.entries << 0, 1, 2, 1,
                 1, 1, 0, 1,
                 2, 1, 1, 1,
                 0, 1, 2, 1;
    try {
        standardize(w, MonomorphicPolicy::Error);
        FAIL("expected MonomorphicColumn");
    } catch (const MonomorphicColumn& e) {
        CHECK(e.columns() == std::vector<std::size_t>{1, 3});
        CHECK(e.exit_code() == 2);
    }
    const auto d = standardize(w, MonomorphicPolicy::Drop);
    CHECK(d.dropped == std::vector<std::size_t>{1, 3});
    CHECK(d.kept == std::vector<std::size_t>{0, 2});
    CHECK(d.z.cols() == 2);
}

TEST_CASE("column identities on random designs")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const std::size_t n = 5 + seed * 7, N = 3 + seed * 11;
        for (const auto& z : {random_z(n, N, seed), random_genotype_z(n, N, seed)}) {
            CHECK(z.colwise().sum().cwiseAbs().maxCoeff() <= n * 1e-10);
            CHECK((z.colwise().squaredNorm().array() / double(n) - 1.0).abs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("residualize")
{
    Rng rng(4);
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < 50; ++i) y(i) = rng.normal() + 3.0;

    SUBCASE("intercept removes the mean")
    {
        const Eigen::VectorXd r = residualize(y, Eigen::MatrixXd::Ones(50, 1));
        CHECK((r - (y.array() - y.mean()).matrix()).cwiseAbs().maxCoeff() < 1e-12);
    }
    Eigen::MatrixXd x(50, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    SUBCASE("y in the span of X")
    {
        const Eigen::VectorXd in = x * Eigen::Vector3d(1.0, -2.0, 0.5);
        CHECK(residualize(in, x).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("output is orthogonal to X")
    {
        const Eigen::VectorXd r = residualize(y, x);
        CHECK((x.transpose() * r).cwiseAbs().maxCoeff() < 1e-8 * y.norm());
    }
    SUBCASE("rank deficiency and shape")
    {
        Eigen::MatrixXd bad(50, 3);
        bad << x.leftCols(2), x.col(0) + x.col(1);
        CHECK_THROWS_AS(residualize(y, bad), RankDeficientCovariates);
        CHECK_THROWS_AS(residualize(y, Eigen::MatrixXd::Ones(50, 50)), RankDeficientCovariates);
        CHECK_THROWS_AS(residualize(y, Eigen::MatrixXd::Ones(49, 1)), ShapeError);
    }
}

TEST_CASE("kinship")
{
    SUBCASE("orthogonal columns of norm sqrt(n)")
    {
        // Rows of a 4x4 Hadamard matrix minus the constant one: centered, unit variance.
        Eigen::MatrixXd z(4, 3);
        z << 1, 1, 1,
            -1, 1, -1,
             1, -1, -1,
            -1, -1, 1;
        const Eigen::MatrixXd r = kinship(z);
        CHECK(r.trace() == doctest::Approx(4.0).epsilon(1e-15));
    }
    SUBCASE("single column is rank one")
    {
        Eigen::MatrixXd z(3, 1);
        z << -1, 0, 1;
        const Eigen::MatrixXd r = kinship(z);
        CHECK((r - z * z.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
        CHECK(lu.rank() == 1);
    }
    SUBCASE("random design: PSD, trace n, ones in kernel")
    {
        const Eigen::MatrixXd z = random_z(20, 100, 3);
        const Eigen::MatrixXd r = kinship(z);
        CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(r.trace() - 20.0) <= 20.0 * 1e-8);
        CHECK((r * Eigen::VectorXd::Ones(20)).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("eigendecompose")
{
    SUBCASE("identity")
    {
        const auto ep = eigendecompose(Eigen::MatrixXd::Identity(4, 4));
        CHECK((ep.values.array() - 1.0).abs().maxCoeff() < 1e-15);
        CHECK((ep.vectors.transpose() * ep.vectors - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("diagonal")
    {
        const auto ep = eigendecompose(Eigen::Vector3d(1.0, 3.0, 0.0).asDiagonal().toDenseMatrix());
        CHECK(ep.values(0) == doctest::Approx(3.0));
        CHECK(ep.values(1) == doctest::Approx(1.0));
        CHECK(std::abs(ep.values(2)) < 1e-15);
    }
    SUBCASE("random PSD reconstruction")
    {
        Rng rng(17);
        Eigen::MatrixXd b(30, 12);
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
        const Eigen::MatrixXd r = b * b.transpose();
        const auto ep = eigendecompose(r);
        const auto& u = ep.vectors;
        CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff() <= 1e-8);
        const double maxl = ep.values.cwiseAbs().maxCoeff();
        Eigen::MatrixXd d = u.transpose() * r * u;
        d.diagonal() -= ep.values;
        CHECK(d.cwiseAbs().maxCoeff() <= 1e-8 * maxl);
        CHECK(std::is_sorted(ep.values.data(), ep.values.data() + 30, std::greater<>()));
        // rank 12, so 18 clamped or tiny eigenvalues
        CHECK((ep.values.array() >= 0.0).all());
    }
    SUBCASE("asymmetric input")
    {
        Eigen::Matrix2d m;
        m << 1, 2, 0, 1;
        CHECK_THROWS_AS(eigendecompose(m), ShapeError);
    }
}

TEST_CASE("rotate")
{
    Rng rng(9);
    Eigen::VectorXd y(6);
    for (Eigen::Index i = 0; i < 6; ++i) y(i) = rng.normal();
    CHECK(rotate(Eigen::MatrixXd::Identity(6, 6), y) == y);

    const int perm[6] = {2, 0, 1, 5, 3, 4};
    Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i) pm(perm[i], i) = 1.0;
    const Eigen::VectorXd yp = rotate(pm, y);
    for (int i = 0; i < 6; ++i) CHECK(yp(i) == y(perm[i]));

    const Eigen::MatrixXd u = random_orthonormal(6, rng);
    CHECK(std::abs(rotate(u, y).norm() - y.norm()) <= 1e-12 * y.norm());
    CHECK_THROWS_AS(rotate(u, Eigen::VectorXd::Ones(5)), ShapeError);
}

TEST_CASE("rotation preserves diagonal quadratic forms")
{
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd u = random_orthonormal(15, rng);
        Eigen::VectorXd y(15), h(15);
        for (Eigen::Index i = 0; i < 15; ++i) {
            y(i) = rng.normal();
            h(i) = rng.uniform(-2.0, 2.0);
        }
        const Eigen::VectorXd yt = rotate(u, y);
        const double lhs = yt.dot(h.asDiagonal() * yt);
        const double rhs = y.dot(u * h.asDiagonal() * u.transpose() * y);
        CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("esd")
{
    const Eigen::Vector3d l(0.0, 1.0, 2.0);
    CHECK(esd(l, -0.5) == 0.0);
    CHECK(esd(l, 2.0) == 1.0);
    CHECK(esd(l, 7.0) == 1.0);
    CHECK(esd(l, 1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(esd(l, 0.0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("spectral decomposition invariants")
{
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const std::size_t n = 10 + 5 * seed, N = (seed % 2) ? n / 2 : 3 * n;
        const Eigen::MatrixXd z = (seed % 3) ? random_z(n, N, seed) : random_genotype_z(n, N, seed);
        Rng rng(100 + seed);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) y(i) = rng.normal() + 1.0;

        DecomposeOptions raw;
        raw.project_intercept = false;
        raw.keep_eigvecs = true;
        const auto full = decompose(z, y, raw);
        CAPTURE(seed);
        CHECK(full.lambdas.size() == Eigen::Index(n));
        CHECK((full.lambdas.array() >= -1e-8).all());
        CHECK(std::abs(full.lambdas.sum() - double(n)) <= 1e-8 * n);
        CHECK(full.lambdas.cwiseAbs().minCoeff() <= 1e-8);
        CHECK(std::abs(full.y_rot.norm() - y.norm()) <= 1e-10 * y.norm());
        CHECK(full.a == doctest::Approx(double(n) / double(N)));

        DecomposeOptions proj;
        proj.keep_eigvecs = true;
        const auto p = decompose(z, y, proj);
        CHECK(p.projected == 1);
        CHECK(p.n_effective() == n - 1);
        // Ones is an eigenvector with eigenvalue 0, so the projected spectrum is
        // the full one minus a single zero.
        Eigen::VectorXd drop_zero(n - 1);
        Eigen::Index k = 0;
        bool skipped = false;
        for (Eigen::Index i = Eigen::Index(n) - 1; i >= 0; --i) {
            if (!skipped && std::abs(full.lambdas(i)) <= 1e-8) {
                skipped = true;
                continue;
            }
            if (k < Eigen::Index(n) - 1) drop_zero(Eigen::Index(n) - 2 - k++) = full.lambdas(i);
        }
        CHECK((p.lambdas - drop_zero).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(p.lambdas.sum() - double(n)) <= 1e-8 * n);
        // Rotated data carries the centered phenotype.
        const Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
        CHECK(std::abs(p.y_rot.norm() - yc.norm()) <= 1e-10 * yc.norm());
        CHECK((p.eigvecs->transpose() * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("decompose with covariates")
{
    const std::size_t n = 40;
    const Eigen::MatrixXd z = random_z(n, 80, 5);
    Rng rng(6);
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i) = rng.normal();
    }
    DecomposeOptions o;
    o.covariates = x;
    o.keep_eigvecs = true;
    const auto d = decompose(z, y, o);
    CHECK(d.projected == 3);
    CHECK(d.n_effective() == n - 3);
    Eigen::MatrixXd x1(n, 3);
    x1 << Eigen::VectorXd::Ones(n), x;
    const Eigen::VectorXd r = residualize(y, x1);
    CHECK(std::abs(d.y_rot.norm() - r.norm()) < 1e-10 * r.norm());
    CHECK((x1.transpose() * *d.eigvecs).cwiseAbs().maxCoeff() < 1e-9);

    // An intercept already in X is not added twice.
    Eigen::MatrixXd xi(n, 2);
    xi << Eigen::VectorXd::Constant(n, 2.0), x.col(0);
    o.covariates = xi;
    CHECK(decompose(z, y, o).projected == 2);

    o.covariates = Eigen::MatrixXd::Ones(n - 1, 1);
    CHECK_THROWS_AS(decompose(z, y, o), ShapeError);
}

TEST_CASE("ESD approaches the Marchenko-Pastur law")
{
    for (bool geno : {false, true}) {
        const Eigen::MatrixXd z = geno ? random_genotype_z(1000, 2000, 8) : random_z(1000, 2000, 8);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kinship(z), Eigen::EigenvaluesOnly);
        const Eigen::VectorXd l = es.eigenvalues();
        const MPLaw law(0.5);
        double sup = 0.0;
        for (int k = 0; k < 2001; ++k) {
            const double x = -0.1 + (law.a_plus + 0.2) * k / 2000.0;
            sup = std::max(sup, std::abs(esd(l, x) - mp_cdf(law, x)));
        }
        CAPTURE(geno);
        CHECK(sup < 0.05);
    }
}
