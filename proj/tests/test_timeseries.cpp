#include <doctest.h>

#include <hyflink/counters.hpp>
#include <hyflink/csv.hpp>
#include <hyflink/rng.hpp>
#include <hyflink/timeseries.hpp>

using namespace hyflink;

namespace {

PhaseSeries random_phase(const SampleGrid& g, std::uint64_t seed) {
    GaussianRng rng(seed);
    std::vector<double> v(g.n);
    for (double& x : v) x = rng.normal();
    return PhaseSeries(g, std::move(v));
}

} // namespace

TEST_CASE("grid rejects invalid parameters") {
    CHECK_THROWS_AS(SampleGrid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(SampleGrid(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(SampleGrid(1.0, 10).samples_for(0.3), std::invalid_argument);
    CHECK(SampleGrid(0.5, 10).samples_for(2.0) == 4);
}

TEST_CASE("delay identity and ramp") {
    SampleGrid g(1.0, 10);
    std::vector<double> ramp(10);
    for (std::size_t i = 0; i < 10; ++i) ramp[i] = static_cast<double>(i);
    PhaseSeries s(g, ramp);

    PhaseSeries d0 = delay(s, 0);
    CHECK(d0.values == s.values);
    CHECK(d0.warmup == 0);

    PhaseSeries d3 = delay(s, 3);
    for (std::size_t i = 3; i < 10; ++i) CHECK(d3[i] == doctest::Approx(i - 3.0));
    CHECK(d3.warmup == 3);

    CHECK_THROWS_AS(delay(s, 10), std::invalid_argument);
}

TEST_CASE("delay composition matches brute force") {
    SampleGrid g(0.5, 200);
    PhaseSeries s = random_phase(g, 11);
    for (auto [k1, k2] : {std::pair<std::size_t, std::size_t>{1, 2}, {7, 13}, {0, 40}}) {
        PhaseSeries a = delay(delay(s, k1), k2);
        PhaseSeries b = delay(s, k1 + k2);
        for (std::size_t i = k1 + k2; i < g.n; ++i) {
            CHECK(a[i] == b[i]);
            CHECK(a[i] == s[i - k1 - k2]); // brute-force index check
        }
        CHECK(a.warmup == b.warmup);
    }
}

TEST_CASE("affine basics") {
    SampleGrid g(1.0, 16);
    PhaseSeries a(g, std::vector<double>(16, 4.0));
    PhaseSeries b(g, std::vector<double>(16, 2.0));

    PhaseSeries zero = affine({{1.0, &a}, {-1.0, &a}});
    for (double v : zero.values) CHECK(v == 0.0);

    PhaseSeries c = affine({{1.0, &a}, {-0.5, &b}});
    for (double v : c.values) CHECK(v == doctest::Approx(3.0));

    PhaseSeries other(SampleGrid(2.0, 16), std::vector<double>(16, 0.0));
    CHECK_THROWS_AS(affine({{1.0, &a}, {1.0, &other}}), std::invalid_argument);
}

TEST_CASE("affine matches elementwise brute force") {
    SampleGrid g(1.0, 333);
    PhaseSeries a = random_phase(g, 1), b = random_phase(g, 2), c = random_phase(g, 3);
    PhaseSeries r = affine({{2.0, &a}, {-1.0, &b}, {0.5, &c}});
    for (std::size_t i = 0; i < g.n; ++i)
        CHECK(r[i] == doctest::Approx(2.0 * a[i] - b[i] + 0.5 * c[i]).epsilon(1e-14));
}

TEST_CASE("affine is exactly linear in scale") {
    SampleGrid g(1.0, 100);
    PhaseSeries a = random_phase(g, 5), b = random_phase(g, 6);
    const double alpha = 2.0; // power of two: scaling commutes with rounding
    PhaseSeries sa = affine({{alpha * 1.5, &a}, {alpha * -0.25, &b}});
    PhaseSeries s1 = affine({{1.5, &a}, {-0.25, &b}});
    for (std::size_t i = 0; i < g.n; ++i) CHECK(sa[i] == alpha * s1[i]);
}

TEST_CASE("delay and affine commute for equal delays") {
    SampleGrid g(1.0, 150);
    PhaseSeries a = random_phase(g, 7), b = random_phase(g, 8);
    const std::size_t k = 9;
    PhaseSeries da = delay(a, k), db = delay(b, k);
    PhaseSeries lhs = affine({{1.0, &da}, {-2.0, &db}});
    PhaseSeries rhs = delay(affine({{1.0, &a}, {-2.0, &b}}), k);
    for (std::size_t i = k; i < g.n; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-14));
    CHECK(lhs.warmup == rhs.warmup);
}

TEST_CASE("integrate_freq basics and round trip") {
    SampleGrid g(1.0, 50);
    FrequencySeries zero(g, std::vector<double>(50, 0.0), CounterKind::Instant);
    for (double v : integrate_freq(zero).values) CHECK(v == 0.0);

    FrequencySeries one(g, std::vector<double>(50, 1.0), CounterKind::Instant);
    PhaseSeries phi = integrate_freq(one);
    for (std::size_t i = 0; i < 50; ++i) CHECK(phi[i] == doctest::Approx(two_pi * i));

    FrequencySeries pi_kind(g, std::vector<double>(50, 1.0), CounterKind::Pi);
    CHECK_THROWS_AS(integrate_freq(pi_kind), std::invalid_argument);

    // Round trip: pi_counter at gate dt reproduces f shifted by one sample.
    GaussianRng rng(42);
    std::vector<double> fv(50);
    for (double& x : fv) x = rng.normal();
    FrequencySeries f(g, fv, CounterKind::Instant);
    FrequencySeries back = pi_counter(integrate_freq(f), CounterConfig{g.dt, CounterKind::Pi, 0.0});
    for (std::size_t k = 0; k < back.size(); ++k)
        CHECK(back[k] == doctest::Approx(fv[k + 1]).epsilon(1e-12));
}

TEST_CASE("series CSV format") {
    SampleGrid g(0.5, 3, 10.0);
    PhaseSeries s(g, {1.0, 2.5, -3.0});
    CHECK(csv::series_to_string(s) == "t,value\n10,1\n10.5,2.5\n11,-3\n");
}

TEST_CASE("non-finite values rejected") {
    SampleGrid g(1.0, 2);
    CHECK_THROWS_AS(PhaseSeries(g, {1.0, std::nan("")}), std::invalid_argument);
}
