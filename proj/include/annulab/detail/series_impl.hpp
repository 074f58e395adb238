#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace annulab::detail {

template <class LogTerm>
SeriesSum sum_power_tail(LogTerm&& log_term, std::int64_t k_start, double decay, double rel_tol,
                         std::int64_t max_k) {
    if (!(rel_tol > 0.0)) throw std::domain_error("sum_power_tail: rel_tol must be positive");
    if (!(decay > 1.0)) throw std::domain_error("sum_power_tail: decay exponent must exceed 1");

    // Terms are fitted as k^{-decay} (c0 + c1/k + c2/k^2 + c3/k^3) through K, K/2, K/4, K/8;
    // each power is summed past K by the midpoint rule with its first Euler-Maclaurin term.
    constexpr int kFit = 4;
    auto tail_after = [&](std::int64_t K) {
        double A[kFit][kFit + 1];
        for (int i = 0; i < kFit; ++i) {
            const std::int64_t ki = K >> i;
            const double inv = 1.0 / static_cast<double>(ki);
            double pw = 1.0;
            for (int j = 0; j < kFit; ++j, pw *= inv) A[i][j] = pw;
            A[i][kFit] = std::exp(log_term(ki)) * std::pow(static_cast<double>(ki), decay);
        }
        for (int c = 0; c < kFit; ++c) {
            for (int r = c + 1; r < kFit; ++r) {
                const double f = A[r][c] / A[c][c];
                for (int j = c; j <= kFit; ++j) A[r][j] -= f * A[c][j];
            }
        }
        double coef[kFit];
        for (int r = kFit - 1; r >= 0; --r) {
            double v = A[r][kFit];
            for (int j = r + 1; j < kFit; ++j) v -= A[r][j] * coef[j];
            coef[r] = v / A[r][r];
        }
        const double x = static_cast<double>(K) + 0.5;
        double tail = 0.0;
        for (int j = 0; j < kFit; ++j) {
            const double p = decay + j;
            tail += coef[j] * (std::pow(x, 1.0 - p) / (p - 1.0) - p * std::pow(x, -p - 1.0) / 24.0);
        }
        return tail;
    };

    long double partial = 0.0L;
    std::int64_t checkpoint = std::max<std::int64_t>(1024, 8 * (k_start + 1));
    double previous = NAN;
    for (std::int64_t k = k_start; k <= max_k; ++k) {
        partial += static_cast<long double>(std::exp(log_term(k)));
        if (k == checkpoint || k == max_k) {
            const double estimate = static_cast<double>(partial) + tail_after(k);
            if (!std::isnan(previous)) {
                const double err = std::abs(estimate - previous);
                if (err <= rel_tol * std::abs(estimate)) {
                    return SeriesSum{estimate, err, k - k_start + 1};
                }
            }
            previous = estimate;
            checkpoint *= 2;
        }
    }
    throw ConvergenceError("series did not reach relative tolerance " + std::to_string(rel_tol) +
                           " within " + std::to_string(max_k) + " terms");
}

}  // namespace annulab::detail
