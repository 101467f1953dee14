#include "sievekit/constants.hpp"
#include "sievekit/errors.hpp"
#include "sievekit/quadrature.hpp"
#include "sievekit/weighted_bound.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace sievekit;
using test_support::tables;

namespace {

const BoundParams headline{SieveDimension(3), 2.0, 12.0};

// Composite trapezoid with n panels, no knowledge of kinks.
template <class F>
double trapezoid(F f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i) {
        sum += f(a + h * static_cast<double>(i));
    }
    return sum * h;
}

}  // namespace

TEST_CASE("adaptive simpson and sign changes") {
    const auto r = adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
    CHECK(std::abs(r.value - (std::exp(1.0) - 1.0)) <= 1e-12);
    const auto kinked = integrate_panels([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, {0.3}, 1e-12);
    CHECK(std::abs(kinked.value - (0.045 + 0.245)) <= 1e-14);
    const auto roots = sign_changes([](double x) { return std::sin(10.0 * x); }, 0.1, 1.0);
    REQUIRE(roots.size() == 3);
    CHECK(std::abs(roots[0] - M_PI / 10.0) <= 1e-11);
    CHECK(std::abs(roots[2] - 3.0 * M_PI / 10.0) <= 1e-11);
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(headline.validate());
    CHECK_THROWS_AS((BoundParams{SieveDimension(3), 1.05, 12.0}.validate()), ParameterError);
    CHECK_THROWS_AS((BoundParams{SieveDimension(3), 12.5, 12.0}.validate()), ParameterError);
    CHECK_THROWS_AS((BoundParams{SieveDimension(1), 2.0, 12.0}.validate()), ParameterError);
    CHECK_THROWS_AS(compute_bound(BoundParams{SieveDimension(3), 1.05, 12.0}, tables(3)), ParameterError);
}

TEST_CASE("integrands vanish at s = 1/u") {
    for (int k : {2, 3}) {
        for (double u : {1.3, 2.0, 2.7}) {
            const BoundParams p{SieveDimension(k), u, 12.0};
            CHECK(std::abs(integrand_I1(1.0 / u, p, tables(k))) <= 1e-12);
            CHECK(std::abs(integrand_I2(1.0 / u, p, tables(k))) <= 1e-12);
        }
    }
}

TEST_CASE("integrand values against independently evaluated branches") {
    // Branches re-evaluated from pairs calibrated on a twice finer grid.
    DhrOptions fine;
    fine.step = default_step / 2.0;
    const DhrPair F3 = calibrate(SieveDimension(3), 26.0, fine);
    const DhrPair F2 = calibrate(SieveDimension(2), 24.0, fine);
    const BuchstabTable w(64.0, default_step / 2.0);

    const double s = 1.0 / 12.0;
    const double expected_I1 =
        (1.0 - 2.0 / 12.0) * 12.0 * std::min(F3.F(11.0), exp_gamma * F2.F(6.0) * w(11.0));
    CHECK(std::abs(integrand_I1(s, headline, tables(3)) - expected_I1) <= 1e-6);
    CHECK(integrand_I1(s, headline, tables(3)) > 0.0);

    const double end = 1.0 - 1.0 / 12.0;
    const double expected_I2 = (10.0 / 11.0) * exp_gamma * F2.f(6.0);
    CHECK(std::abs(integrand_I2(end, headline, tables(3)) - expected_I2) <= 1e-6);

    CHECK_THROWS_AS(integrand_I1(0.9, headline, tables(3)), DomainError);
    CHECK_THROWS_AS(integrand_I2(0.2, headline, tables(3)), DomainError);
}

TEST_CASE("min and max pick the right branch") {
    const auto& t = tables(3);
    const double upper_weight = exp_gamma * t.lower_pair().F(6.0);
    const double lower_weight = exp_gamma * t.lower_pair().f(6.0);
    for (int i = 0; i <= 200; ++i) {
        const double s1 = 1.0 / 12.0 + (0.5 - 1.0 / 12.0) * i / 200.0;
        const double x1 = 12.0 - 12.0 * s1;
        const double weight1 = (1.0 - 2.0 * s1) / s1;
        const double v1 = integrand_I1(s1, headline, t);
        CHECK(v1 <= t.pair().F(x1) * weight1 * (1.0 + 1e-14) + 1e-15);
        CHECK(v1 <= upper_weight * t.w()(x1) * weight1 * (1.0 + 1e-14) + 1e-15);
        if (t.pair().F(x1) <= upper_weight * t.w()(x1)) {
            CHECK(v1 == Catch::Approx(t.pair().F(x1) * weight1).epsilon(1e-14));
        }

        const double s2 = 0.5 + (11.0 / 12.0 - 0.5) * i / 200.0;
        const double x2 = std::max(1.0, 12.0 - 12.0 * s2);
        const double weight2 = (2.0 * s2 - 1.0) / s2;
        const double v2 = integrand_I2(s2, headline, t);
        CHECK(v2 >= t.pair().f(x2) * weight2 * (1.0 - 1e-14) - 1e-15);
        CHECK(v2 >= lower_weight * t.w()(x2) * weight2 * (1.0 - 1e-14) - 1e-15);
    }
}

TEST_CASE("headline bound for k = 3") {
    const BoundReport r = compute_bound(headline, tables(3));
    CHECK(r.N >= 6.923);
    CHECK(r.N <= 6.963);
    CHECK(r.N < 7.0);
    CHECK(r.r == 7);
    CHECK_FALSE(r.borderline);
    CHECK(r.I1 >= 0.0);
    CHECK(r.I2 >= 0.0);
    CHECK(r.r > std::max(r.N, 2.0 * 3 - 1.0));
    CHECK(std::abs(r.S4_term - exp_gamma * tables(3).lower_pair().f(6.0) / 12.0) <= 1e-15);
}

TEST_CASE("unmixed comparison value") {
    const BoundReport r = compute_bound(BoundParams{SieveDimension(3), 1.5, 12.0}, tables(3));
    CHECK(r.old_value > 7.0);
    CHECK(r.old_value <= 8.0);
}

TEST_CASE("below the sifting limit") {
    CHECK_THROWS_AS(compute_bound(BoundParams{SieveDimension(3), 2.0, 6.0}, tables(3)), EvaluationError);
}

TEST_CASE("kink handling agrees with a brute-force trapezoid") {
    const BoundReport r = compute_bound(headline, tables(3));
    const auto& t = tables(3);
    const double I1 = trapezoid([&](double s) { return integrand_I1(s, headline, t); }, 1.0 / 12.0, 0.5, 1000000);
    const double I2 = trapezoid([&](double s) { return integrand_I2(s, headline, t); }, 0.5, 11.0 / 12.0, 1000000);
    CHECK(std::abs(I1 - r.I1) <= 1e-6);
    CHECK(std::abs(I2 - r.I2) <= 1e-6);
}

TEST_CASE("cut points include the kinks of w") {
    const auto cuts = integration_cuts_I2(headline, tables(3));
    auto has = [&cuts](double s) {
        return std::any_of(cuts.begin(), cuts.end(), [s](double c) { return std::abs(c - s) <= 1e-12; });
    };
    CHECK(has(0.75));
    CHECK(has(5.0 / 6.0));
    CHECK(std::is_sorted(cuts.begin(), cuts.end()));
}

TEST_CASE("halving the quadrature tolerance stays within the error estimate") {
    for (const BoundParams& p : {headline, BoundParams{SieveDimension(3), 1.5, 12.0}, BoundParams{SieveDimension(2), 1.7, 9.0}}) {
        const BoundReport a = compute_bound(p, tables(p.k.value()), 1e-9);
        const BoundReport b = compute_bound(p, tables(p.k.value()), 0.5e-9);
        CHECK(std::abs(a.I1 - b.I1) < a.I1_error + b.I1_error + 1e-15);
        CHECK(std::abs(a.I2 - b.I2) < a.I2_error + b.I2_error + 1e-15);
        CHECK(a.err_estimate < 1e-6);
    }
}

TEST_CASE("the mixed bound never exceeds the unmixed one") {
    for (int k : {2, 3}) {
        const auto& t = tables(k);
        int checked = 0;
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                const double u = 1.2 + 1.8 * i / 15.0;
                const double v = 8.0 + 8.0 * j / 15.0;
                const BoundParams p{SieveDimension(k), u, v};
                if (!(u > v / (v - 1.0)) || !(t.pair().f(v) > 0.0) || !(t.lower_pair().f(v / 2.0) > 0.0)) {
                    continue;
                }
                const BoundReport r = compute_bound(p, t);
                INFO("k = " << k << " u = " << u << " v = " << v);
                CHECK(r.N <= r.old_value);
                ++checked;
            }
        }
        CHECK(checked >= 100);
    }
}

TEST_CASE("optimizer") {
    const auto& t = tables(3);
    const SearchBox box{1.2, 3.0, 8.0, 16.0, 16};
    const SearchResult mixed = optimize_bound(box, Objective::mixed, t);
    CHECK(mixed.best.N <= 6.943 + 0.02);
    CHECK(mixed.objective == objective_value(mixed.best, Objective::mixed));

    const SearchResult unmixed = optimize_bound(box, Objective::unmixed, t);
    CHECK(unmixed.objective > 7.0);

    const SearchResult serial = optimize_bound(box, Objective::mixed, t, 1);
    CHECK(serial.best.params.u == mixed.best.params.u);
    CHECK(serial.best.params.v == mixed.best.params.v);
    CHECK(serial.objective == mixed.objective);

    CHECK_THROWS_AS(optimize_bound({5.0, 6.0, 4.0, 4.5, 4}, Objective::mixed, t), ParameterError);
    CHECK_THROWS_AS(optimize_bound({1.2, 3.0, 8.0, 16.0, 1}, Objective::mixed, t), ParameterError);
}

TEST_CASE("tables persist in a cache directory") {
    test_support::TempDir dir;
    TableOptions options;
    options.cache_dir = dir.path();
    const BoundReport cold = compute_bound(headline, options);
    const BoundReport warm = compute_bound(headline, options);
    CHECK(cold.N == warm.N);
    CHECK(cold.I1 == warm.I1);
    CHECK(std::filesystem::exists(dir.path() / "buchstab-h1024-u64.table"));
}
