#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ganaug/metrics/dice.hpp"
#include "ganaug/metrics/stats.hpp"
#include "ganaug/util/error.hpp"

using namespace ganaug::metrics;

TEST_CASE("dice on hand-counted masks") {
    // |A| = 4, |B| = 6, |A∩B| = 3 -> 2*3/10
    std::vector<std::uint8_t> a{1, 1, 1, 1, 0, 0, 0, 0, 0};
    std::vector<std::uint8_t> b{0, 1, 1, 1, 1, 1, 1, 0, 0};
    CHECK(dice(a, b) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(dice(a, a) == 1.0);
    std::vector<std::uint8_t> c{0, 0, 0, 0, 1, 1, 0, 0, 0};
    CHECK(dice(a, c) == 0.0);
    std::vector<std::uint8_t> empty(9, 0);
    CHECK(dice(empty, empty) == 1.0);
    CHECK(dice(empty, a) == 0.0);
    std::vector<std::uint8_t> shorter(8, 0);
    CHECK_THROWS_AS(dice(a, shorter), ganaug::ValidationError);
}

TEST_CASE("dice is symmetric and bounded on random masks") {
    std::mt19937 rng(5);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> a(64), b(64);
        for (auto& v : a) v = coin(rng);
        for (auto& v : b) v = coin(rng);
        const double d = dice(a, b);
        CHECK(d == dice(b, a));
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        if (d == 1.0) CHECK(a == b);
    }
}

TEST_CASE("per-class counts from label grids") {
    std::vector<std::uint8_t> truth{0, 1, 1, 2, 2, 3, 0, 0};
    std::vector<std::uint8_t> pred{0, 1, 2, 2, 2, 0, 0, 0};
    auto counts = class_dice_counts(pred, truth, 3);
    CHECK(counts[0].score() == doctest::Approx(2.0 * 1 / 3));
    CHECK(counts[1].score() == doctest::Approx(2.0 * 2 / 5));
    CHECK(counts[2].score() == 0.0);
    auto report = make_report(counts);
    CHECK(report.mean == doctest::Approx((2.0 / 3 + 0.8 + 0.0) / 3));
    auto none = class_dice_counts(std::vector<std::uint8_t>(4, 0), std::vector<std::uint8_t>(4, 0), 2);
    auto r2 = make_report(none);
    CHECK(r2.per_class[0] == 1.0);
    CHECK(r2.absent[0]);
}

TEST_CASE("aggregate_repeats") {
    std::vector<double> constant(8, 88.9);
    auto s = aggregate_repeats(constant);
    CHECK(s.mean == doctest::Approx(88.9));
    CHECK(s.std == doctest::Approx(0.0));
    std::vector<double> v{1, 2, 3};
    s = aggregate_repeats(v);
    CHECK(s.mean == 2.0);
    CHECK(s.std == 1.0);
    CHECK(format_mean_std(88.9, 0.51) == "88.9 (0.51)");
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(aggregate_repeats(one), ganaug::ValidationError);
}

TEST_CASE("incomplete beta against closed forms") {
    // I_x(1,1) = x; I_x(a,1) = x^a; I_x(1,b) = 1-(1-x)^b
    for (double x : {0.01, 0.2, 0.5, 0.93}) {
        CHECK(incomplete_beta(1, 1, x) == doctest::Approx(x).epsilon(1e-13));
        CHECK(incomplete_beta(3.5, 1, x) == doctest::Approx(std::pow(x, 3.5)).epsilon(1e-12));
        CHECK(incomplete_beta(1, 2.5, x) == doctest::Approx(1 - std::pow(1 - x, 2.5)).epsilon(1e-12));
    }
}

TEST_CASE("t-test matches boost reference and the stated edge cases") {
    std::vector<double> a{88.4, 89.1, 88.7, 89.0, 88.8};
    std::vector<double> b{89.3, 89.6, 89.2, 89.5, 89.4};
    auto r = t_test_two_tailed(a, b);
    boost::math::students_t dist(r.dof);
    const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_statistic)));
    CHECK(std::abs(r.p_value - ref) < 1e-10);
    CHECK(r.significant);

    auto same = t_test_two_tailed(a, a);
    CHECK(same.t_statistic == 0.0);
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK_FALSE(same.significant);

    std::vector<double> lo{1, 2, 3, 4}, hi{10, 11, 12, 13};
    CHECK(t_test_two_tailed(lo, hi).significant);

    std::vector<double> k1(5, 3.0), k2(5, 3.0), k3(5, 4.0);
    auto flat = t_test_two_tailed(k1, k2);
    CHECK(flat.p_value == 1.0);
    CHECK_FALSE(flat.significant);
    CHECK(t_test_two_tailed(k1, k3).p_value == 0.0);

    auto student = t_test_two_tailed(a, b, TTestKind::student);
    CHECK(student.dof == 8.0);
}
