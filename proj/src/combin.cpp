#include "annulab/combin.hpp"

#include <math.h>

#include <cmath>
#include <string>

namespace annulab {

namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kLog4 = 2.0 * kLog2;

double lgamma_threadsafe(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

void require(bool ok, const char* what) {
    if (!ok) throw std::domain_error(what);
}

}  // namespace

EnumCache::EnumCache(std::size_t max_n) : log_fact_(max_n + 1) {
    for (std::size_t n = 0; n <= max_n; ++n) {
        log_fact_[n] = lgamma_threadsafe(static_cast<double>(n) + 1.0);
    }
}

double EnumCache::log_factorial(std::int64_t n) const {
    require(n >= 0, "log_factorial: negative argument");
    if (static_cast<std::size_t>(n) < log_fact_.size()) return log_fact_[static_cast<std::size_t>(n)];
    return lgamma_threadsafe(static_cast<double>(n) + 1.0);
}

double EnumCache::log_double_factorial(std::int64_t n) const {
    // Only (-1)!! is given a value among negative arguments.
    require(n >= -1, "log_double_factorial: argument below -1 is undefined");
    if (n <= 0) return 0.0;
    if (n % 2 == 0) {
        const std::int64_t m = n / 2;
        return static_cast<double>(m) * kLog2 + log_factorial(m);
    }
    const std::int64_t m = (n + 1) / 2;
    return log_factorial(2 * m) - static_cast<double>(m) * kLog2 - log_factorial(m);
}

double EnumCache::log_central_binomial(std::int64_t n) const {
    require(n >= 0, "log_central_binomial: negative argument");
    return log_factorial(2 * n) - 2.0 * log_factorial(n);
}

const EnumCache& default_enum_cache() {
    static const EnumCache cache;
    return cache;
}

double log_card_t1(std::int64_t L, std::int64_t k, const EnumCache& cache) {
    require(L >= 1 && k >= 0, "log_card_t1: need L >= 1 and k >= 0");
    require(!(L == 1 && k == 0), "log_card_t1: (L, k) = (1, 0) is excluded");
    return static_cast<double>(k - 1) * kLog4 + cache.log_double_factorial(2 * L + 3 * k - 5) -
           cache.log_factorial(k) - cache.log_double_factorial(2 * L + k - 1) +
           std::log(static_cast<double>(L)) + cache.log_central_binomial(L);
}

double log_card_t2(std::int64_t L, std::int64_t p, std::int64_t k, const EnumCache& cache) {
    require(L >= 1 && p >= 1 && k >= 0, "log_card_t2: need L, p >= 1 and k >= 0");
    const std::int64_t s = 2 * (L + p);
    return static_cast<double>(k) * kLog4 + cache.log_double_factorial(s + 3 * k - 2) -
           cache.log_factorial(k) - cache.log_double_factorial(s + k) +
           std::log(static_cast<double>(L)) + cache.log_central_binomial(L) +
           std::log(static_cast<double>(p)) + cache.log_central_binomial(p);
}

double z1_series(std::int64_t L, double rel_tol, std::int64_t max_k) {
    require(L >= 0, "z1_series: L must be nonnegative");
    require(rel_tol > 0.0, "z1_series: rel_tol must be positive");
    if (L == 0) return 1.0 / (24.0 * kSqrt3);
    const double log_base = std::log(kBoltzmannBase);
    const auto& cache = default_enum_cache();
    auto log_term = [&](std::int64_t k) {
        return log_card_t1(L, k, cache) - static_cast<double>(k) * log_base;
    };
    return detail::sum_power_tail(log_term, L == 1 ? 1 : 0, 2.5, rel_tol, max_k).value;
}

double z2_series(std::int64_t L, std::int64_t p, double rel_tol, std::int64_t max_k) {
    require(L >= 1 && p >= 1, "z2_series: need L, p >= 1");
    require(rel_tol > 0.0, "z2_series: rel_tol must be positive");
    const double log_base = std::log(kBoltzmannBase);
    const auto& cache = default_enum_cache();
    auto log_term = [&](std::int64_t k) {
        return log_card_t2(L, p, k, cache) - static_cast<double>(k) * log_base;
    };
    return detail::sum_power_tail(log_term, 0, 1.5, rel_tol, max_k).value;
}

double log_z1(std::int64_t L) {
    require(L >= 0, "z1: L must be nonnegative");
    if (L == 0) return -std::log(24.0 * kSqrt3);
    if (L == 1) {
        static const double value = std::log(z1_series(1, 1e-13));
        return value;
    }
    const auto& cache = default_enum_cache();
    return static_cast<double>(L) * std::log(6.0) + cache.log_double_factorial(2 * L - 5) -
           std::log(8.0 * kSqrt3) - cache.log_factorial(L);
}

double z1(std::int64_t L) { return std::exp(log_z1(L)); }

double log_c1(std::int64_t k, const EnumCache& cache) {
    require(k >= 1, "log_c1: k must be positive");
    return static_cast<double>(k - 2) * std::log(3.0) - std::log(4.0 * std::sqrt(2.0 * kPi)) +
           std::log(static_cast<double>(k)) + cache.log_central_binomial(k);
}

}  // namespace annulab
