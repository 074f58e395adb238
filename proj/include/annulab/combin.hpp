#pragma once

// Exact enumeration of type I triangulations with one or two boundaries, in
// log scale, and the Boltzmann partition functions built from those counts.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace annulab {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kSqrt3 = 1.7320508075688772935;
inline constexpr double kPi = 3.14159265358979323846;
/// Boltzmann weight base 12*sqrt(3): a triangulation with k inner vertices has weight base^-k.
inline constexpr double kBoltzmannBase = 12.0 * kSqrt3;

/// Memoized log-factorials. Immutable after construction, so one instance can be
/// shared by concurrent readers. Arguments past the table fall back to lgamma.
class EnumCache {
public:
    explicit EnumCache(std::size_t max_n = std::size_t{1} << 20);

    double log_factorial(std::int64_t n) const;
    /// log(n!!) for n >= -1, with (-1)!! = 0!! = 1.
    double log_double_factorial(std::int64_t n) const;
    /// log binom(2n, n).
    double log_central_binomial(std::int64_t n) const;

    std::size_t capacity() const { return log_fact_.size(); }

private:
    std::vector<double> log_fact_;
};

const EnumCache& default_enum_cache();

/// log Card T1(L, k): triangulations with a simple boundary of length L, k inner
/// vertices and a distinguished boundary edge. (L, k) = (1, 0) is rejected.
double log_card_t1(std::int64_t L, std::int64_t k, const EnumCache& cache = default_enum_cache());

/// log Card T2(L, p, k): two vertex-disjoint simple boundaries of lengths L and p.
double log_card_t2(std::int64_t L, std::int64_t p, std::int64_t k,
                   const EnumCache& cache = default_enum_cache());

/// Partition function Z1(L). Closed form for L >= 2, the convention value
/// 1/(24 sqrt 3) at L = 0, and the summed series at L = 1 (the closed form
/// would need (-3)!!, which has no admissible value there).
double z1(std::int64_t L);
double log_z1(std::int64_t L);

inline constexpr std::int64_t kDefaultSeriesMaxK = 100000;

/// Z1(L) by summing the weighted counts. Terms decay like k^{-5/2}; the tail past
/// the truncation point is fitted and integrated. Throws ConvergenceError when
/// max_k terms cannot reach rel_tol.
double z1_series(std::int64_t L, double rel_tol, std::int64_t max_k = kDefaultSeriesMaxK);

/// Z2(L, p) by the same method. These terms decay like k^{-3/2}.
double z2_series(std::int64_t L, std::int64_t p, double rel_tol,
                 std::int64_t max_k = kDefaultSeriesMaxK);

/// log C1(k) = log( 3^{k-2} / (4 sqrt(2 pi)) * k * binom(2k, k) ), k >= 1.
double log_c1(std::int64_t k, const EnumCache& cache = default_enum_cache());

namespace detail {

struct SeriesSum {
    double value = 0.0;
    double error = 0.0;
    std::int64_t terms = 0;
};

/// Sums exp(log_term(k)) for k >= k_start assuming term(k) ~ c k^{-decay} (1 + d/k).
/// The tail is fitted from the terms at K and K/2 at each doubling checkpoint K.
template <class LogTerm>
SeriesSum sum_power_tail(LogTerm&& log_term, std::int64_t k_start, double decay, double rel_tol,
                         std::int64_t max_k);

}  // namespace detail

}  // namespace annulab

#include "annulab/detail/series_impl.hpp"
