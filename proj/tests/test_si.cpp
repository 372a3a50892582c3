#include <doctest.h>

#include <cmath>

#include "ate/errors.hpp"
#include "ate/si_estimators.hpp"
#include "helpers.hpp"

using namespace ate;

namespace {

StudyData two_group_fixture(int n, std::uint64_t seed, double tau = 1.0) {
    Rng rng(seed);
    std::vector<double> y(n), x1(n), x2(n);
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) {
        x1[i] = rng.normal();
        x2[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = 1.0 + 0.8 * x1[i] + 0.5 * x2[i] + tau * t[i] + 0.5 * rng.normal();
    }
    StudyData d = testutil::make_data(y, t, {"x1", "x2"}, {x1, x2});
    d.set_roles({"x1", "x2"}, {"x1", "x2"});
    return d;
}

PropensityModel constant_propensity(const StudyData& data) {
    PropensityModel prop;
    prop.link = Link::Logit;
    prop.names = data.z_names();
    prop.fit.coefficients =
        Eigen::VectorXd::Zero(1 + static_cast<int>(prop.names.size()));
    prop.fit.converged = true;
    return prop;
}

}  // namespace

TEST_SUITE("si") {

TEST_CASE("difference is zero for identical responses") {
    StudyData d = testutil::make_data({2, 2, 2, 2}, {1, 1, 0, 0}, {"x"},
                                      {{0.1, 0.2, 0.3, 0.4}});
    AteReport rep = ate_difference(d, false);
    CHECK(rep.tau == 0.0);
    CHECK(rep.se == 0.0);
}

TEST_CASE("difference rejects an empty group") {
    StudyData d = testutil::make_data({1, 2}, {1, 1}, {"x"}, {{0, 0}});
    CHECK_THROWS_AS(ate_difference(d, false), ValidationError);
}

TEST_CASE("difference known two-sample case") {
    StudyData d = testutil::make_data({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 0, 0}, {"x"},
                                      {{0, 0, 0, 0, 0, 0}});
    AteReport rep = ate_difference(d, false);
    CHECK(rep.mu1 == doctest::Approx(2.0));
    CHECK(rep.mu0 == doctest::Approx(5.0));
    CHECK(rep.tau == doctest::Approx(-3.0));
    CHECK(rep.se == doctest::Approx(std::sqrt(2.0 / 3.0)));  // s^2 = 1 per group
}

TEST_CASE("regression gives zero when both groups share coefficients") {
    Rng rng(21);
    int n = 60;
    std::vector<double> y(n), x(n);
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        t[i] = i % 2;
        y[i] = 2.0 + 1.5 * x[i];  // exact in both groups
    }
    StudyData d = testutil::make_data(y, t, {"x"}, {x});
    d.set_roles({"x"}, {"x"});
    AteReport rep = ate_regression(d, false);
    CHECK(std::abs(rep.tau) < 1e-10);
}

TEST_CASE("matching reproduces hand-paired counterfactuals on a 6-row fixture") {
    // groups share identical covariate rows; 1-NN matches are exact
    StudyData d = testutil::make_data({1.0, 2.0, 3.0, 1.5, 2.5, 3.5},
                                      {1, 1, 1, 0, 0, 0}, {"x"},
                                      {{0.0, 1.0, 2.0, 0.0, 1.0, 2.0}});
    d.set_roles({"x"}, {"x"});
    MatchOptions opts;
    opts.m = 1;
    opts.se_replicates = 0;
    AteReport rep = ate_matching(d, opts, false);
    // every pair differs by -0.5 at the shared covariate value
    CHECK(rep.tau == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("matching is symmetric under a t flip with unchanged y") {
    Rng rng(31);
    int n = 40;
    std::vector<double> y(n), x(n);
    std::vector<int> t(n);
    for (int i = 0; i < n / 2; ++i) {
        x[i] = rng.normal();
        y[i] = rng.normal();
        t[i] = 1;
        // duplicate row with t flipped
        x[n / 2 + i] = x[i];
        y[n / 2 + i] = y[i];
        t[n / 2 + i] = 0;
    }
    StudyData d = testutil::make_data(y, t, {"x"}, {x});
    d.set_roles({"x"}, {"x"});
    MatchOptions opts;
    opts.m = 1;
    opts.se_replicates = 0;
    AteReport rep = ate_matching(d, opts, false);
    CHECK(std::abs(rep.tau) < 1e-12);
}

TEST_CASE("matching with m equal to the group size collapses to the difference") {
    StudyData d = two_group_fixture(30, 41);
    auto [g1, g0] = split_groups(d);
    int m = std::min(g1.n(), g0.n());
    // trim to balanced groups so m matches both pools
    std::vector<double> y, x1, x2;
    std::vector<int> t;
    int k1 = 0, k0 = 0;
    for (int i = 0; i < d.n(); ++i) {
        if (d.t[i] == 1 && k1 >= m) continue;
        if (d.t[i] == 0 && k0 >= m) continue;
        (d.t[i] == 1 ? k1 : k0)++;
        y.push_back(d.y[i]);
        x1.push_back(d.cov(i, 0));
        x2.push_back(d.cov(i, 1));
        t.push_back(d.t[i]);
    }
    StudyData b = testutil::make_data(y, t, {"x1", "x2"}, {x1, x2});
    b.set_roles({"x1", "x2"}, {"x1", "x2"});
    MatchOptions opts;
    opts.m = m;
    opts.se_replicates = 0;
    AteReport match = ate_matching(b, opts, false);
    AteReport diff = ate_difference(b, false);
    CHECK(match.tau == doctest::Approx(diff.tau).epsilon(1e-12));
}

TEST_CASE("matching rejects too-small groups") {
    StudyData d = testutil::make_data({1, 2, 3}, {1, 1, 0}, {"x"}, {{0, 1, 2}});
    d.set_roles({"x"}, {"x"});
    MatchOptions opts;
    opts.m = 2;
    CHECK_THROWS_AS(ate_matching(d, opts, false), ValidationError);
}

TEST_CASE("brewer-hajek equals the crude difference at constant propensity") {
    StudyData d = two_group_fixture(80, 51);
    AteReport bh = ate_brewer_hajek(d, constant_propensity(d), false);
    AteReport diff = ate_difference(d, false);
    CHECK(bh.tau == doctest::Approx(diff.tau).epsilon(1e-12));
    CHECK(bh.mu1 == doctest::Approx(diff.mu1).epsilon(1e-12));
}

TEST_CASE("doubly robust equals regression when the outcome model is exact") {
    Rng rng(61);
    int n = 100;
    std::vector<double> y(n), x(n);
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = t[i] ? 1.0 + 2.0 * x[i] : 0.5 - 1.0 * x[i];  // deterministic in x
    }
    StudyData d = testutil::make_data(y, t, {"x"}, {x});
    d.set_roles({"x"}, {"x"});
    // distorted propensity: far from the truth on purpose
    PropensityModel prop;
    prop.link = Link::Logit;
    prop.names = d.z_names();
    prop.fit.coefficients = Eigen::VectorXd(2);
    prop.fit.coefficients << 1.3, -0.9;
    AteReport dr = ate_doubly_robust(d, prop, false);
    AteReport ols = ate_regression(d, false);
    CHECK(dr.tau == doctest::Approx(ols.tau).epsilon(1e-10));
}

TEST_CASE("bh and dr are location equivariant") {
    StudyData d = two_group_fixture(120, 71);
    PropensityModel prop = fit_propensity(d, false);
    AteReport bh0 = ate_brewer_hajek(d, prop, false);
    AteReport dr0 = ate_doubly_robust(d, prop, false);
    StudyData shifted = d;
    shifted.y.array() += 5.0;
    AteReport bh1 = ate_brewer_hajek(shifted, prop, false);
    AteReport dr1 = ate_doubly_robust(shifted, prop, false);
    CHECK(bh1.tau == doctest::Approx(bh0.tau).epsilon(1e-10));
    CHECK(dr1.tau == doctest::Approx(dr0.tau).epsilon(1e-10));
    CHECK(bh1.mu1 == doctest::Approx(bh0.mu1 + 5.0).epsilon(1e-10));
    CHECK(dr1.mu0 == doctest::Approx(dr0.mu0 + 5.0).epsilon(1e-10));
}

TEST_CASE("weighted output reduces to unweighted under equal weights") {
    StudyData d = two_group_fixture(90, 81);
    d.w = 3.25 * Eigen::VectorXd::Ones(d.n());
    PropensityModel pu = fit_propensity(d, false);
    PropensityModel pw = fit_propensity(d, true);
    MatchOptions mo;
    mo.m = 2;
    mo.se_replicates = 25;
    mo.seed = 17;

    std::vector<std::pair<AteReport, AteReport>> pairs = {
        {ate_difference(d, false), ate_difference(d, true)},
        {ate_regression(d, false), ate_regression(d, true)},
        {ate_matching(d, mo, false), ate_matching(d, mo, true)},
        {ate_brewer_hajek(d, pu, false), ate_brewer_hajek(d, pw, true)},
        {ate_doubly_robust(d, pu, false), ate_doubly_robust(d, pw, true)},
    };
    for (const auto& [u, w] : pairs) {
        CAPTURE(method_name(u.method));
        CHECK(std::abs(u.tau - w.tau) < 1e-10);
        CHECK(std::abs(u.mu1 - w.mu1) < 1e-10);
        CHECK(std::abs(u.mu0 - w.mu0) < 1e-10);
        CHECK(std::abs(u.se - w.se) < 1e-10);
    }
}

TEST_CASE("degenerate propensities are rejected") {
    StudyData d = two_group_fixture(20, 91);
    PropensityModel prop;
    prop.link = Link::Logit;
    prop.names = d.z_names();
    prop.fit.coefficients = Eigen::VectorXd::Zero(3);
    prop.fit.coefficients[0] = 60.0;  // saturates every unit
    CHECK_THROWS_AS(ate_brewer_hajek(d, prop, false), ValidationError);
}

}  // TEST_SUITE
