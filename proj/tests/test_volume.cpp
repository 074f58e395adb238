#include <doctest.h>

#include <cmath>

#include "annulab/combin.hpp"
#include "annulab/kernels.hpp"
#include "annulab/stats.hpp"

using namespace annulab;

TEST_CASE("volume pmf values") {
    const VolumeSampler v(100);
    CHECK(v.pmf(2, 0) == doctest::Approx(4.0 / (3.0 * kSqrt3)).epsilon(1e-12));
    CHECK(v.pmf(2, 1) == doctest::Approx(3.0 / kBoltzmannBase / (3.0 * kSqrt3 / 4.0)).epsilon(1e-12));
    CHECK(v.pmf(2, 1) == doctest::Approx(0.1111).epsilon(1e-3));
    CHECK(v.pmf(3, 2) == doctest::Approx(0.1069167165165974).epsilon(1e-11));
    // a loop cannot enclose nothing
    CHECK(v.pmf(1, 0) == 0.0);
    CHECK(v.pmf(1, 1) == doctest::Approx(0.71823351279308384).epsilon(1e-12));
    CHECK(std::exp(VolumeSampler::log_pmf(3, 2.0)) == doctest::Approx(v.pmf(3, 2)).epsilon(1e-12));
    // the gamma extension interpolates smoothly
    const double mid = std::exp(VolumeSampler::log_pmf(3, 2.5));
    CHECK(mid < v.pmf(3, 2));
    CHECK(mid > v.pmf(3, 3));
    // both evaluations of the log pmf meet where the large-k form takes over
    for (std::int64_t n : {1, 4, 300})
        for (double k : {63.0, 64.0, 65.0, 200.0})
            CHECK(std::exp(VolumeSampler::log_pmf(n, k)) == doctest::Approx(v.pmf(n, static_cast<std::int64_t>(k))).epsilon(1e-11));
}

TEST_CASE("volume table mass is one") {
    const VolumeSampler v(5000);
    for (std::int64_t n : {1, 2, 3, 10, 57, 400, 5000}) {
        CAPTURE(n);
        CHECK(std::abs(v.table_mass(n) - 1.0) < 1e-9);
        CHECK(v.tail_start(n) > 0.0);
    }
    CHECK_THROWS_AS(v.table_mass(5001), std::out_of_range);
    CHECK_THROWS_AS(v.pmf(0, 0), std::domain_error);
}

TEST_CASE("volume sampler passes chi-square") {
    const VolumeSampler v(64);
    for (std::int64_t n : {1, 2, 6, 30}) {
        const int cells = 60;
        std::vector<double> probs(cells + 1, 0.0);
        double head = 0.0;
        for (int k = 0; k < cells; ++k) head += probs[k] = v.pmf(n, k);
        probs[cells] = 1.0 - head;
        std::vector<std::int64_t> counts(cells + 1, 0);
        Rng rng = make_stream(500 + n, 0);
        for (int i = 0; i < 1000000; ++i) {
            const std::int64_t k = v.sample(n, rng);
            REQUIRE(k >= 0);
            ++counts[std::min<std::int64_t>(k, cells)];
        }
        // drop cells the merge rule would have to fold: chisq_counts merges internally
        const auto res = chisq_counts(counts, probs, 1e-3);
        CAPTURE(n);
        CHECK(res.statistic < res.critical);
    }
}

TEST_CASE("volume tail frequency") {
    // P(K >= 2000) at boundary 4 from the exact pmf, against the binned and power-tail sampler
    const VolumeSampler v(8);
    long double head = 0.0L;
    for (int k = 0; k < 2000; ++k) head += v.pmf(4, k);
    const double p = static_cast<double>(1.0L - head);
    const int n = 2000000;
    Rng rng = make_stream(2024, 1);
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += v.sample(4, rng) >= 2000;
    const double se = std::sqrt(p * (1 - p) / n);
    CAPTURE(p);
    CHECK(std::abs(hits / double(n) - p) < 4 * se);
    // swallowed m uses boundary m + 1
    Rng a = make_stream(3, 3), b = make_stream(3, 3);
    for (int i = 0; i < 100; ++i) CHECK(v.sample_swallowed(3, a) == v.sample(4, b));
}

TEST_CASE("volume mean is stable across batches") {
    // E[K] is finite, the variance is not: only the batch means are compared
    const VolumeSampler v(4);
    long double mean = 0.0L;
    for (int k = 1; k < 4000000; ++k) mean += static_cast<long double>(k) * v.pmf(2, k);
    // remaining tail sum k * c k^{-5/2} ~ 2c K^{-1/2}, with c read off the last term
    const double K = 4000000.0;
    const double c = v.pmf(2, 3999999) * std::pow(K, 2.5);
    const double exact = static_cast<double>(mean) + 2.0 * c / std::sqrt(K);
    for (int batch = 0; batch < 4; ++batch) {
        Rng rng = make_stream(77, batch);
        double s = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i) s += static_cast<double>(v.sample(2, rng));
        CAPTURE(batch);
        CHECK(std::abs(s / n / exact - 1.0) < 0.1);
    }
}
