#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "runpred/baselines.hpp"
#include "runpred/purdy.hpp"

using namespace runpred;

namespace {

EventCatalog two_events() {
    return EventCatalog({{"A", 100.0}, {"B", 200.0}});
}

}  // namespace

TEST_CASE("predict_mean excludes the query row") {
    PerformanceTable t(EventCatalog::standard(), 3);
    t.set(0, 0, 10.0);
    t.set(1, 0, 12.0);
    t.set(2, 0, 100.0);  // query's own entry must not leak in
    CHECK(predict_mean(t, 2, 0) == doctest::Approx(11.0));

    PerformanceTable single(EventCatalog::standard(), 2);
    single.set(0, 0, 10.0);
    CHECK(predict_mean(single, 1, 0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(predict_mean(single, 1, 1), DataError);
}

TEST_CASE("predict_knn: identical twin wins at k=1, large k degenerates to the mean") {
    PerformanceTable t(EventCatalog::standard(), 4);
    // Query row 0: events 0,1 present, target 2.
    t.set(0, 0, 10.0);
    t.set(0, 1, 21.0);
    // Twin of the query.
    t.set(1, 0, 10.0);
    t.set(1, 1, 21.0);
    t.set(1, 2, 47.0);
    // Two other candidates.
    t.set(2, 0, 11.5);
    t.set(2, 1, 24.0);
    t.set(2, 2, 52.0);
    t.set(3, 0, 13.0);
    t.set(3, 1, 27.5);
    t.set(3, 2, 60.0);

    CHECK(predict_knn(t, 0, 2, 1) == doctest::Approx(47.0));
    CHECK(predict_knn(t, 0, 2, 2) == doctest::Approx(0.5 * (47.0 + 52.0)));
    CHECK(predict_knn(t, 0, 2, 99) == doctest::Approx((47.0 + 52.0 + 60.0) / 3.0));

    PerformanceTable empty(EventCatalog::standard(), 2);
    empty.set(0, 0, 10.0);
    CHECK_THROWS_AS(predict_knn(empty, 0, 2, 1), DataError);
}

TEST_CASE("riegel formula and its transitivity") {
    CHECK(predict_riegel(5000.0, 900.0, 5000.0) == doctest::Approx(900.0));
    // Frozen from direct evaluation of 2400 * 4.2195^1.06.
    CHECK(predict_riegel(10000.0, 2400.0, 42195.0) == doctest::Approx(11040.478).epsilon(1e-6));
    CHECK(std::abs(predict_riegel(10000.0, 2400.0, 42195.0) - 11041.0) <= 1.0);
    CHECK(predict_riegel(100.0, 10.0, 400.0) == doctest::Approx(43.4694).epsilon(1e-4));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(100.0, 42195.0), s(9.0, 12000.0);
    for (int i = 0; i < 50; ++i) {
        const double d1 = d(rng), d2 = d(rng), d3 = d(rng), t1 = s(rng);
        const double two_hop = predict_riegel(d2, predict_riegel(d1, t1, d2), d3);
        const double direct = predict_riegel(d1, t1, d3);
        CHECK(two_hop == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK_THROWS_AS(predict_riegel(-1.0, 10.0, 400.0), DataError);
    CHECK_THROWS_AS(predict_riegel(100.0, 0.0, 400.0), DataError);
}

TEST_CASE("power-law fits: exact data, two points, pooled exponent") {
    auto catalog = EventCatalog::standard();

    PerformanceTable exact(catalog, 1);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        exact.set(0, c, 0.04 * std::pow(catalog.distance(c), 1.1));
    }
    auto fit = fit_power_law(exact, /*per_athlete=*/true);
    CHECK(*fit.exponents[0] == doctest::Approx(1.1).epsilon(1e-12));
    CHECK(fit.rss <= 1e-18);

    PerformanceTable two(catalog, 1);
    two.set(0, 0, 10.0);
    two.set(0, 3, 120.0);
    auto fit2 = fit_power_law(two, true);
    CHECK(fit2.rss <= 1e-20);  // interpolation, zero degrees of freedom

    // Two athletes with exponents 1.05 / 1.15 over the same events pool to
    // the midpoint under the shared-exponent fit.
    PerformanceTable pooled(catalog, 2);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        pooled.set(0, c, 0.05 * std::pow(catalog.distance(c), 1.05));
        pooled.set(1, c, 0.05 * std::pow(catalog.distance(c), 1.15));
    }
    auto global = fit_power_law(pooled, false);
    CHECK(global.shared_exponent == doctest::Approx(1.10).epsilon(1e-12));

    // Per-athlete refit never loses to the pooled fit on that athlete.
    for (std::size_t r = 0; r < 2; ++r) {
        double rss_global = 0.0, rss_ind = 0.0;
        auto ind = fit_power_law(pooled, true);
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            const double ls = std::log(catalog.distance(c));
            const double lt = std::log(*pooled.value(r, c));
            const double eg = lt - (*global.log_coeff[r] + global.shared_exponent * ls);
            const double ei = lt - (*ind.log_coeff[r] + *ind.exponents[r] * ls);
            rss_global += eg * eg;
            rss_ind += ei * ei;
        }
        CHECK(rss_ind <= rss_global + 1e-15);
    }

    PerformanceTable degenerate(catalog, 1);
    degenerate.set(0, 0, 10.0);
    CHECK_THROWS_AS(fit_power_law(degenerate, true), DataError);
}

TEST_CASE("purdy points: identity, monotonicity, round trip") {
    const auto& table = PurdyTable::standard();
    for (double d : {100.0, 800.0, 5000.0, 42195.0}) {
        const double t_std = table.standard_time(d);
        CHECK(purdy_points(d, t_std, table) == doctest::Approx(table.standard_points));
        CHECK(std::abs(predict_purdy(d, 1.3 * t_std, d) - 1.3 * t_std) <= 1e-6);
    }

    // Points fall strictly as time grows.
    double prev = purdy_points(1500.0, 200.0);
    for (double t = 210.0; t < 400.0; t += 10.0) {
        const double p = purdy_points(1500.0, t);
        CHECK(p < prev);
        prev = p;
    }

    // Round trip d1 -> d2 -> d1 within 1e-4 s, checked against the
    // closed-form inversion of the points map as an oracle.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> pickd(100.0, 42195.0);
    for (int i = 0; i < 30; ++i) {
        const double d1 = pickd(rng), d2 = pickd(rng);
        const double t1 = table.standard_time(d1) * 1.25;
        const double t2 = predict_purdy(d1, t1, d2);
        CHECK(std::abs(predict_purdy(d2, t2, d1) - t1) <= 1e-4);

        const double p = purdy_points(d1, t1);
        const double v = table.velocity(d2);
        const double k = table.k0 - table.k1 * v;
        const double a = table.scale / k;
        const double b = 1.0 - table.standard_points / a;
        const double closed_form = table.standard_time(d2) / (p / a + b);
        CHECK(t2 == doctest::Approx(closed_form).epsilon(1e-7));
    }

    CHECK_THROWS_AS(purdy_points(50.0, 6.0), DataError);
    CHECK_THROWS_AS(predict_purdy(100.0, 10.0, 80000.0), DataError);

    // Faster source implies faster prediction.
    CHECK(predict_purdy(1500.0, 230.0, 5000.0) < predict_purdy(1500.0, 240.0, 5000.0));
}

TEST_CASE("bundled purdy curve file matches the embedded table") {
    std::ifstream in(std::string(RUNPRED_DATA_DIR) + "/purdy_curve.json");
    REQUIRE(in.good());
    auto loaded = load_purdy_table(in);
    const auto& built_in = PurdyTable::standard();
    REQUIRE(loaded.distances == built_in.distances);
    REQUIRE(loaded.velocities == built_in.velocities);
    CHECK(loaded.scale == built_in.scale);
    CHECK(loaded.standard_points == built_in.standard_points);
    for (std::size_t i = 3; i < loaded.velocities.size(); ++i) {
        CHECK(loaded.velocities[i] < loaded.velocities[i - 1]);
    }
}

TEST_CASE("em_impute: complete table is a fixed point") {
    PerformanceTable t(two_events(), 4);
    t.set(0, 0, 1.0);
    t.set(0, 1, 2.0);
    t.set(1, 0, 2.0);
    t.set(1, 1, 2.5);
    t.set(2, 0, 3.0);
    t.set(2, 1, 4.0);
    t.set(3, 0, 4.0);
    t.set(3, 1, 4.5);
    auto result = em_impute(t);
    CHECK(result.converged);
    CHECK(result.iterations <= 3);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 2; ++c) CHECK(*result.table.value(r, c) == *t.value(r, c));
    }
}

TEST_CASE("em_impute: perfectly correlated columns give the conditional-line imputation") {
    PerformanceTable t(two_events(), 8);
    const double xs[] = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5};
    for (std::size_t r = 0; r < 8; ++r) {
        t.set(r, 0, xs[r]);
        if (r != 5) t.set(r, 1, 2.0 * xs[r] - 3.0);
    }
    auto result = em_impute(t, 1e-6, 2000);
    CHECK(*result.table.value(5, 1) == doctest::Approx(2.0 * xs[5] - 3.0).epsilon(1e-6));
}

TEST_CASE("em log-likelihood never decreases on random instances") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(2.0, 9.0);
    std::bernoulli_distribution miss(0.3);
    for (int inst = 0; inst < 100; ++inst) {
        PerformanceTable t(EventCatalog::standard(), 15);
        for (std::size_t r = 0; r < t.rows(); ++r) {
            std::size_t n_present = 0;
            for (std::size_t c = 0; c < t.cols(); ++c) {
                if (!miss(rng)) {
                    t.set(r, c, u(rng));
                    ++n_present;
                }
            }
            if (n_present == 0) t.set(r, 0, u(rng));
        }
        auto result = em_impute(t);  // throws on a ridge-free likelihood drop
        CHECK(result.loglik.size() >= 2);
    }
}

TEST_CASE("nuclear norm: no shrinkage reproduces a complete table") {
    PerformanceTable t(EventCatalog::standard(), 5);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1.0, 5.0);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 10; ++c) t.set(r, c, u(rng));
    }
    auto result = nuclear_norm_impute(t, 0.0);
    CHECK(result.converged);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            CHECK(*result.table.value(r, c) == doctest::Approx(*t.value(r, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("nuclear norm: huge lambda shrinks the solution to zero") {
    PerformanceTable t(EventCatalog::standard(), 4);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1.0, 5.0);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            if ((r + c) % 4 != 0) t.set(r, c, u(rng));
        }
    }
    auto result = nuclear_norm_impute(t, 1e9);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 10; ++c) {
            if (!t.present(r, c)) {
                CHECK(std::abs(*result.table.value(r, c)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("nuclear norm: rank-1 recovery at 30% missing, objective monotone") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.8, 1.8);
    const std::size_t n = 40;
    auto catalog = EventCatalog::standard();
    std::vector<double> profile(catalog.size());
    for (auto& v : profile) v = u(rng);
    PerformanceTable full(catalog, n), masked(catalog, n);
    std::bernoulli_distribution miss(0.3);
    for (std::size_t r = 0; r < n; ++r) {
        const double c0 = u(rng);
        std::size_t kept = 0;
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            full.set(r, c, c0 * profile[c]);
            if (!miss(rng)) {
                masked.set(r, c, c0 * profile[c]);
                ++kept;
            }
        }
        if (kept == 0) masked.set(r, 0, *full.value(r, 0));
    }
    auto result = nuclear_norm_impute(masked, 0.005, 1e-11, 20000);
    for (std::size_t i = 1; i < result.objective.size(); ++i) {
        CHECK(result.objective[i] <= result.objective[i - 1] + 1e-9);
    }
    double worst = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < catalog.size(); ++c) {
            if (masked.present(r, c)) continue;
            worst = std::max(worst, std::abs(*result.table.value(r, c) - *full.value(r, c)) /
                                        *full.value(r, c));
        }
    }
    CHECK(worst <= 1e-3);
}
