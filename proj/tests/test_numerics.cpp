#include <doctest.h>

#include <cmath>

#include "ate/numerics.hpp"
#include "ate/rng.hpp"

using namespace ate;

TEST_SUITE("numerics") {

TEST_CASE("normal cdf against reference values") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(norm_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-13));
    CHECK(norm_cdf(8.0) + norm_cdf(-8.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(norm_cdf(-8.0) > 0.0);
}

TEST_CASE("logistic evaluates and saturates stably") {
    CHECK(logistic(1.0) == doctest::Approx(0.7310585786).epsilon(1e-9));
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(-800.0) == 0.0);
    CHECK(logistic(800.0) == 1.0);
    CHECK(log_logistic(-800.0) == doctest::Approx(-800.0));
    CHECK(std::isfinite(log_logistic(800.0)));
}

TEST_CASE("gauss-hermite integrates polynomials exactly") {
    const GaussHermiteRule& rule = gauss_hermite(20);
    double sqrt_pi = std::sqrt(M_PI);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int k = 0; k < 20; ++k) {
        m0 += rule.weights[k];
        m2 += rule.weights[k] * rule.nodes[k] * rule.nodes[k];
        m4 += rule.weights[k] * std::pow(rule.nodes[k], 4);
    }
    CHECK(m0 == doctest::Approx(sqrt_pi).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(0.5 * sqrt_pi).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(0.75 * sqrt_pi).epsilon(1e-13));
}

TEST_CASE("adaptive simpson on known integrals") {
    double s = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12);
    CHECK(s == doctest::Approx(2.0).epsilon(1e-10));
    double g = adaptive_simpson([](double x) { return norm_pdf(x); }, -9.0, 9.0, 1e-12);
    CHECK(g == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("mills ratios stay finite across the clamped index range") {
    for (double eta : {-8.0, -4.0, 0.0, 4.0, 8.0}) {
        CHECK(std::isfinite(inverse_mills_upper(eta)));
        CHECK(std::isfinite(inverse_mills_lower(eta)));
        CHECK(inverse_mills_upper(eta) > 0.0);
        CHECK(inverse_mills_lower(eta) < 0.0);
    }
    // large negative index: phi/Phi approaches -eta
    CHECK(inverse_mills_upper(-8.0) == doctest::Approx(8.0).epsilon(0.02));
}

TEST_CASE("keyed rng streams are independent of call order") {
    Rng a = Rng::keyed(42, 1, 7);
    Rng b = Rng::keyed(42, 1, 7);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c = Rng::keyed(42, 1, 8);
    CHECK(Rng::keyed(42, 1, 7).next_u64() != c.next_u64());
}

TEST_CASE("rng normal moments") {
    Rng rng(2024);
    const int n = 200000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        s += z;
        ss += z * z;
    }
    double mean = s / n;
    double var = ss / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("chi-squared mean matches its degrees of freedom") {
    Rng rng(99);
    const int n = 100000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.chi_squared(6.0);
    CHECK(s / n == doctest::Approx(6.0).epsilon(0.03));
}

}  // TEST_SUITE
