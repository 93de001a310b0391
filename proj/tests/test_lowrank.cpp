#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "runpred/lowrank.hpp"
#include "runpred/synth.hpp"

using namespace runpred;

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("rank-1 table yields its generating profile as the first component") {
    auto catalog = EventCatalog::standard();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    Eigen::VectorXd profile(10);
    for (int j = 0; j < 10; ++j) profile(j) = u(rng);

    PerformanceTable t(catalog, 30);
    t.set_parameterization(Parameterization::log_time);
    std::vector<double> coef(30);
    for (std::size_t r = 0; r < 30; ++r) {
        coef[r] = u(rng);
        for (std::size_t c = 0; c < 10; ++c) t.set(r, c, coef[r] * profile(c));
    }
    auto model = extract_components(t, 1);
    const Eigen::VectorXd f1 = model.components.row(0).transpose();
    CHECK(std::abs(cosine(f1, profile)) >= 1.0 - 1e-12);
    // Reconstruction lambda_1 * f_1 reproduces the table.
    for (std::size_t r = 0; r < 30; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            CHECK(model.coefficients(r, 0) * f1(c) ==
                  doctest::Approx(*t.value(r, c)).epsilon(1e-9));
        }
    }
    // Requesting more than the matrix rank errors out.
    CHECK_THROWS_AS(extract_components(t, 2), DataError);
}

TEST_CASE("constructed orthogonal triplets are recovered exactly") {
    // Coefficient columns made exactly orthogonal so the SVD axes coincide
    // with the generating components (a Gaussian sample only matches them up
    // to an O(1/sqrt(n)) rotation).
    auto spec = default_synth_spec(40, 0.0, 9);
    const std::size_t n = 40;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);

    // Column 0 arbitrary; columns 1 and 2 orthogonal to it and to each other
    // inside the zero-first-coordinate subspace, making athlete 0 purely
    // rank 1.
    Eigen::VectorXd v1(n);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n); ++r) v1(r) = 25.0 + g(rng);
    Eigen::MatrixXd sub(n - 1, 3);
    for (Eigen::Index r = 0; r + 1 < static_cast<Eigen::Index>(n); ++r) {
        sub(r, 0) = v1(r + 1);
        sub(r, 1) = g(rng);
        sub(r, 2) = g(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n - 1, 3);
    Eigen::MatrixXd lambdas = Eigen::MatrixXd::Zero(n, 3);
    lambdas.col(0) = v1 * (30.0 / v1.norm());
    for (int i = 1; i < 3; ++i) {
        for (Eigen::Index r = 0; r + 1 < static_cast<Eigen::Index>(n); ++r) {
            lambdas(r + 1, i) = q(r, i) * (i == 1 ? 2.0 : 1.0);
        }
    }

    PerformanceTable t(spec.catalog, n);
    t.set_parameterization(Parameterization::log_time);
    Eigen::MatrixXd m = lambdas * spec.components;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            t.set(r, c, m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        }
    }
    auto model = extract_components(t, 3);

    for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXd fi = model.components.row(i).transpose();
        const Eigen::VectorXd gi = spec.components.row(i).transpose();
        CHECK(std::abs(cosine(fi, gi)) >= 1.0 - 1e-9);
        for (int j = 0; j < i; ++j) {
            CHECK(std::abs(fi.dot(model.components.row(j).transpose())) <= 1e-12);
        }
        CHECK(fi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }

    // The pure rank-1 athlete has vanishing second and third coefficients.
    auto s0 = three_number_summary(model, 0);
    CHECK(std::abs(s0.lambda2) <= 1e-9);
    CHECK(std::abs(s0.lambda3) <= 1e-9);

    // Reconstruction at full model rank is exact (relative Frobenius).
    Eigen::MatrixXd recon = model.coefficients * model.components;
    CHECK((recon - m).norm() / m.norm() <= 1e-9);
}

TEST_CASE("gaussian-sample components align up to the finite-sample rotation") {
    auto spec = default_synth_spec(300, 0.0, 9);
    auto model = extract_components(generate(spec).table, 3);
    for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXd fi = model.components.row(i).transpose();
        const Eigen::VectorXd gi = spec.components.row(i).transpose();
        CHECK(cosine(fi, gi) >= 0.995);
    }
}

TEST_CASE("sign convention is stable under row permutation") {
    auto spec = default_synth_spec(50, 0.02, 11);
    auto table = generate(spec).table;
    auto model = extract_components(table, 3);

    std::vector<std::size_t> perm(table.rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
    auto permuted = table.select_rows(perm);
    auto model2 = extract_components(permuted, 3);

    for (int i = 0; i < 3; ++i) {
        CHECK((model.components.row(i) - model2.components.row(i)).norm() <= 1e-10);
    }
    // f1 slopes upward against log distance.
    auto fit = individual_exponent_diagnostic(model.components.row(0).transpose(),
                                              table.catalog());
    CHECK(fit.slope > 0.0);
}

TEST_CASE("truncation beats random alternative rank-r reconstructions") {
    auto spec = default_synth_spec(40, 0.05, 13);
    auto table = generate(spec).table;
    auto model = extract_components(table, 2);

    Eigen::MatrixXd m(40, 10);
    for (Eigen::Index r = 0; r < 40; ++r) {
        for (Eigen::Index c = 0; c < 10; ++c) m(r, c) = *table.value(r, c);
    }
    const double best = (model.coefficients * model.components - m).norm();

    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd pert_c = model.components;
        for (Eigen::Index i = 0; i < pert_c.rows(); ++i) {
            for (Eigen::Index j = 0; j < pert_c.cols(); ++j) pert_c(i, j) += g(rng);
        }
        // Optimal coefficients for the perturbed basis, still rank 2.
        Eigen::MatrixXd coeff =
            m * pert_c.transpose() * (pert_c * pert_c.transpose()).inverse();
        CHECK((coeff * pert_c - m).norm() >= best - 1e-9);
    }
}

TEST_CASE("individual exponent diagnostic on exact and constant inputs") {
    auto catalog = EventCatalog::standard();
    Eigen::VectorXd log_dist(10);
    for (int j = 0; j < 10; ++j) log_dist(j) = std::log(catalog.distance(j));

    auto exact = individual_exponent_diagnostic(log_dist.normalized(), catalog);
    CHECK(exact.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exact.slope == doctest::Approx(1.0 / log_dist.norm()).epsilon(1e-12));

    auto flat = individual_exponent_diagnostic(Eigen::VectorXd::Constant(10, 0.3), catalog);
    CHECK(flat.r_squared == 0.0);

    // Synthetic table built on f1 = normalized log distance.
    auto spec = default_synth_spec(60, 0.01, 15);
    auto model = extract_components(generate(spec).table, 3);
    auto diag = individual_exponent_diagnostic(model.components.row(0).transpose(), catalog);
    CHECK(diag.r_squared > 0.999);
}

TEST_CASE("world-record fits: nested residuals, exact at full rank") {
    auto spec = default_synth_spec(50, 0.01, 19);
    auto table = generate(spec).table;
    auto model10 = extract_components(table, 10);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Eigen::VectorXd wr(10);
    for (int j = 0; j < 10; ++j) {
        wr(j) = 1.05 * std::log(table.catalog().distance(j)) - 2.5 + 0.05 * u(rng);
    }

    double prev = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= 10; ++r) {
        auto fit = fit_world_records(wr, model10, r);
        CHECK(fit.residual_norm <= prev + 1e-12);
        prev = fit.residual_norm;
    }
    CHECK(fit_world_records(wr, model10, 10).residual_norm <= 1e-9);
    CHECK(fit_world_records(wr, model10, 1).residual_norm >
          fit_world_records(wr, model10, 3).residual_norm);

    // Records generated inside the rank-3 span are matched at r = 3.
    Eigen::VectorXd inside = model10.components.topRows(3).transpose() * Eigen::Vector3d(25.0, 0.4, 0.2);
    CHECK(fit_world_records(inside, model10, 3).residual_norm <= 1e-9);
}

TEST_CASE("three-number summary and exponent scaling") {
    auto spec = default_synth_spec(200, 0.0, 29);
    auto result = generate(spec);
    auto model = extract_components(result.table, 3);

    // Identical rows get identical summaries.
    PerformanceTable dup = result.table;
    for (std::size_t c = 0; c < dup.cols(); ++c) dup.set(1, c, *dup.value(0, c));
    auto dup_model = extract_components(dup, 3);
    auto s0 = three_number_summary(dup_model, 0);
    auto s1 = three_number_summary(dup_model, 1);
    CHECK(s0.lambda1 == doctest::Approx(s1.lambda1).epsilon(1e-9));
    CHECK(s0.lambda2 == doctest::Approx(s1.lambda2).epsilon(1e-9));
    CHECK(s0.lambda3 == doctest::Approx(s1.lambda3).epsilon(1e-9));

    // Coefficients match the generator's draws up to the finite-sample
    // rotation of the singular axes.
    for (std::size_t r = 0; r < 50; ++r) {
        auto s = three_number_summary(model, r);
        CHECK(s.lambda1 == doctest::Approx(result.coefficients(r, 0)).epsilon(1e-4));
        CHECK(std::abs(s.lambda2 - result.coefficients(r, 1)) <= 0.02);
        CHECK(std::abs(s.lambda3 - result.coefficients(r, 2)) <= 0.02);
    }

    // A rank-1 table cannot support a rank-3 summary.
    PerformanceTable pure(result.table.catalog(), 30);
    pure.set_parameterization(Parameterization::log_time);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(25.0, 30.0);
    for (std::size_t r = 0; r < 30; ++r) {
        const double l1 = u(rng);
        for (std::size_t c = 0; c < 10; ++c) pure.set(r, c, l1 * spec.components(0, c));
    }
    auto pure_model = extract_components(pure, 1);
    CHECK_THROWS_AS(three_number_summary(pure_model, 0), DataError);

    // Median individual exponent of the default population sits in the
    // paper's plausibility band.
    std::vector<double> exponents;
    for (std::size_t r = 0; r < result.table.rows(); ++r) {
        exponents.push_back(individual_exponent(model, r));
    }
    std::nth_element(exponents.begin(), exponents.begin() + exponents.size() / 2,
                     exponents.end());
    const double median = exponents[exponents.size() / 2];
    CHECK(median > 1.05);
    CHECK(median < 1.20);

    CHECK_THROWS_AS(three_number_summary(model, 10000), DataError);
}

TEST_CASE("pure-U coefficient variant matches the scaled one up to singular values") {
    auto spec = default_synth_spec(60, 0.01, 33);
    auto table = generate(spec).table;
    auto scaled = extract_components(table, 3, true);
    auto pure = extract_components(table, 3, false);
    for (int i = 0; i < 3; ++i) {
        for (std::size_t r = 0; r < 10; ++r) {
            CHECK(scaled.coefficients(static_cast<Eigen::Index>(r), i) ==
                  doctest::Approx(pure.coefficients(static_cast<Eigen::Index>(r), i) *
                                  scaled.singular_values(i)).epsilon(1e-9));
        }
    }
}
