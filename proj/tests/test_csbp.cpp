#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "annulab/csbp.hpp"
#include "annulab/laws.hpp"
#include "annulab/stats.hpp"

using namespace annulab;

namespace {

// sup |F - G| over the merged sample, ties handled by stepping past equal values
double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(double(i) / x.size() - double(j) / y.size()));
    }
    return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m) {
    // c(1e-3) = sqrt(-log(1e-3 / 2) / 2)
    return std::sqrt(-0.5 * std::log(0.5e-3)) * std::sqrt(double(n + m) / (double(n) * double(m)));
}

}  // namespace

TEST_CASE("psi values") {
    CHECK(psi(0.0) == 0.0);
    CHECK(psi(1.0) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-15));
    CHECK(psi(4.0) == doctest::Approx(std::sqrt(8.0 / 3.0) * 8.0).epsilon(1e-15));
    CHECK_THROWS_AS(psi(-1.0), std::domain_error);
}

TEST_CASE("stable increments reproduce the Laplace exponent") {
    for (double dt : {1e-2, 1e-1, 1.0}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            Rng rng = make_stream(1000, static_cast<std::uint64_t>(dt * 1000 + lambda * 10));
            const int n = 10000000;
            long double s = 0.0L;
            for (int i = 0; i < n; ++i) s += std::exp(-lambda * StableSampler::increment(dt, rng));
            const double got = std::log(static_cast<double>(s / n)) / dt;
            CAPTURE(dt);
            CAPTURE(lambda);
            CHECK(std::abs(got / psi(lambda) - 1.0) < 0.01);
        }
    }
    // the standard variable: E exp(-S) = exp(sqrt 2)
    Rng rng = make_stream(3, 0);
    long double s = 0.0L;
    for (int i = 0; i < 1000000; ++i) s += std::exp(-StableSampler::standard(rng));
    CHECK(static_cast<double>(s / 1000000) == doctest::Approx(std::exp(std::sqrt(2.0))).epsilon(0.01));
}

TEST_CASE("stable increments are centered") {
    Rng rng = make_stream(4, 0);
    std::vector<double> x(1000000);
    for (double& v : x) v = StableSampler::increment(1.0, rng);
    const MeanEstimate m = mean_ci(x, 0.99);
    CHECK(std::abs(m.mean) < 4 * m.std_error);
}

TEST_CASE("stable increments are infinitely divisible") {
    Rng rng = make_stream(5, 0);
    const int n = 100000;
    std::vector<double> whole(n), halves(n);
    for (int i = 0; i < n; ++i) whole[i] = StableSampler::increment(0.3, rng);
    for (int i = 0; i < n; ++i) halves[i] = StableSampler::increment(0.15, rng) + StableSampler::increment(0.15, rng);
    CHECK(ks_two_sample(whole, halves) < ks_two_sample_critical(n, n));
    // and a clearly different time is rejected
    std::vector<double> other(n);
    for (int i = 0; i < n; ++i) other[i] = StableSampler::increment(0.4, rng);
    CHECK(ks_two_sample(whole, other) > ks_two_sample_critical(n, n));
}

TEST_CASE("initial perimeter law") {
    CHECK(initial_perimeter_quantile(1.0, 7.0 / 8.0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(initial_perimeter_quantile(2.5, 7.0 / 8.0) == doctest::Approx(7.5).epsilon(1e-14));
    CHECK(initial_perimeter_quantile(1.0, 0.0) == 0.0);
    CHECK(initial_perimeter_quantile(1.0, 1e-12) < 1e-11);
    CHECK(initial_perimeter_cdf(1.0, 3.0) == doctest::Approx(7.0 / 8.0).epsilon(1e-14));
    CHECK(initial_perimeter_cdf(1.0, -1.0) == 0.0);
    CHECK_THROWS_AS(initial_perimeter_quantile(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(initial_perimeter_cdf(0.0, 1.0), std::domain_error);

    for (double a : {0.5, 1.0, 2.0}) {
        Rng rng = make_stream(6, static_cast<std::uint64_t>(a * 10));
        std::vector<double> z(100000);
        for (double& v : z) v = sample_initial_perimeter(a, rng);
        std::sort(z.begin(), z.end());
        CHECK(ks_statistic(z, [a](double x) { return initial_perimeter_cdf(a, x); }) < ks_critical(100000, 1e-3));
        CHECK(median(z) == doctest::Approx(a * (std::cbrt(4.0) - 1.0)).epsilon(0.02));
    }
}

TEST_CASE("exact extinction sampler") {
    CHECK(extinction_cdf(2.0 / 3.0, 1.0) == doctest::Approx(std::exp(-1.0)));
    Rng rng = make_stream(7, 0);
    CHECK(sample_extinction_time(0.0, rng) == 0.0);
    for (double x : {0.5, 2.0}) {
        std::vector<double> t(50000);
        for (double& v : t) v = sample_extinction_time(x, rng);
        std::sort(t.begin(), t.end());
        CHECK(ks_statistic(t, [x](double s) { return extinction_cdf(x, s); }) < ks_critical(50000, 1e-3));
    }
}

TEST_CASE("path invariants") {
    Rng rng = make_stream(8, 0);
    const CsbpPath zero = simulate_csbp(0.0, {}, rng);
    CHECK(zero.values == std::vector<double>{0.0});
    CHECK(zero.extinction_time == 0.0);
    CHECK(zero.running_max == 0.0);

    CsbpPath p;
    for (int rep = 0; rep < 300; ++rep) {
        simulate_csbp(sample_initial_perimeter(1.0, rng), {1e-3, 50.0, 1e-8}, rng, p);
        REQUIRE(!p.values.empty());
        double mx = 0.0;
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            REQUIRE(p.values[i] >= 0.0);
            // zero only at the end: the path is absorbed
            if (p.values[i] == 0.0) REQUIRE(i + 1 == p.values.size());
            mx = std::max(mx, p.values[i]);
        }
        CHECK(mx == p.running_max);
        if (p.censored) {
            CHECK(!p.extinction_time);
            CHECK(p.values.back() > 0.0);
        } else {
            CHECK(*p.extinction_time == doctest::Approx(p.time_at(p.values.size() - 1)));
        }
        CHECK(visits_level(p, p.z0));
    }
    CHECK_THROWS_AS(simulate_csbp(1.0, {0.0, 1.0, 1e-8}, rng), std::domain_error);
    CHECK_THROWS_AS(simulate_csbp(-1.0, {}, rng), std::domain_error);
}

TEST_CASE("extinction by time one") {
    // P_x(T <= 1) = e^{-1} at x = 2/3
    const int n = 10000;
    int dead = 0;
    CsbpPath p;
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(9, i);
        simulate_csbp(2.0 / 3.0, {1e-3, 1.0, 1e-8}, rng, p);
        dead += !p.censored;
    }
    const double want = std::exp(-1.0);
    // the Euler scheme dies early by about 0.01 at dt = 1e-3; allow that on top of 3 SE
    const double discretization = 0.012;
    CAPTURE(dead / double(n) - want);
    CHECK(std::abs(dead / double(n) - want) < 3 * std::sqrt(want * (1 - want) / n) + discretization);
}

TEST_CASE("self-similarity under c = 4") {
    // c Z_{t / sqrt c} from x has the law of Z_t from c x
    const double c = 4.0, x = 0.5, t = 1.0;
    const int n = 20000;
    std::vector<double> scaled(n), direct(n);
    CsbpPath p;
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(10, i);
        simulate_csbp(x, {5e-4, t / std::sqrt(c), 1e-8}, rng, p);
        scaled[i] = c * p.values.back();
        Rng rng2 = make_stream(11, i);
        simulate_csbp(c * x, {1e-3, t, 1e-8}, rng2, p);
        direct[i] = p.values.back();
    }
    CHECK(ks_two_sample(scaled, direct) < ks_two_sample_critical(n, n));
}

TEST_CASE("continuous passage through a level") {
    // the Levy process from 0.36 never reaches 1 with probability sqrt(0.64) = 0.8
    const int n = 10000;
    int hits = 0;
    CsbpPath p;
    for (int i = 0; i < n; ++i) {
        Rng rng = make_stream(12, i);
        simulate_csbp(0.36, {1e-3, 1e4, 1e-8}, rng, p);
        hits += visits_level(p, 1.0);
    }
    CHECK(std::abs(hits / double(n) - 0.2) < 3 * std::sqrt(0.16 / n));
}

TEST_CASE("functionals of a hand-built path") {
    CsbpPath p;
    p.dt = 0.1;
    p.z0 = 0.5;
    p.values = {0.5, 1.2, 2.0, 1.5, 0.8, 0.3, 0.0};
    p.extinction_time = 0.6;
    p.running_max = 2.0;
    CHECK(visits_level(p, 2.0));
    CHECK(!visits_level(p, 2.1));
    CHECK(*last_passage(p, 1.0) == doctest::Approx((3.0 + 0.5 / 0.7) * 0.1).epsilon(1e-14));
    CHECK(*last_passage(p, 0.5) == doctest::Approx((4.0 + 0.3 / 0.5) * 0.1).epsilon(1e-14));
    CHECK(!last_passage(p, 3.0));
    CHECK(*perimeter_at_radius(p, 0.2) == 0.8);
    CHECK(*perimeter_at_radius(p, 0.15) == 0.8);
    CHECK(!perimeter_at_radius(p, 0.6));
    CHECK(!perimeter_at_radius(p, 0.7));
    CHECK_THROWS_AS(perimeter_at_radius(p, 0.0), std::domain_error);
    CHECK(occupation_integral(p, [](double y) { return y; }) == doctest::Approx(0.63).epsilon(1e-14));
    CHECK(occupation_integral(p, [](double) { return 0.0; }) == 0.0);
    CHECK_THROWS_AS(occupation_integral(p, [](double y) { return y + 1.0; }), std::invalid_argument);

    // censored while above the level: the last passage is the horizon
    CsbpPath q;
    q.dt = 0.5;
    q.values = {1.0, 3.0, 4.0};
    q.running_max = 4.0;
    q.censored = true;
    CHECK(*last_passage(q, 2.0) == doctest::Approx(1.0));
    CHECK(!perimeter_at_radius(q, 0.1));
}

TEST_CASE("halving dt moves the annulus estimates by less than their CI width") {
    struct Est {
        double visit, visit_width, mean, mean_width;
    };
    auto run = [](double dt) {
        const int n = 20000;
        int visits = 0;
        std::vector<double> lengths;
        CsbpPath p;
        for (int i = 0; i < n; ++i) {
            Rng rng = make_stream(13, i);
            simulate_csbp(sample_initial_perimeter(1.0, rng), {dt, 1e4, 1e-8}, rng, p);
            if (auto l = last_passage(p, 1.0)) {
                ++visits;
                lengths.push_back(*l);
            }
        }
        const Interval ci = wilson_ci(visits, n, 0.99);
        const MeanEstimate m = mean_ci(lengths, 0.99);
        return Est{visits / double(n), ci.high - ci.low, m.mean, m.ci.high - m.ci.low};
    };
    const Est coarse = run(1e-3), fine = run(5e-4);
    CHECK(std::abs(coarse.visit - fine.visit) < coarse.visit_width);
    CHECK(std::abs(coarse.mean - fine.mean) < coarse.mean_width);
    CHECK(std::abs(fine.mean / expected_length(1.0, 1.0) - 1.0) < 0.05);
}
