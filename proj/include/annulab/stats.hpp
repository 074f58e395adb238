#pragma once

// Goodness-of-fit and interval machinery for the acceptance experiments.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace annulab {

/// One experiment verdict. `verdict` is recomputed from (statistic, threshold,
/// direction) by decide(), never set by hand.
struct SummaryReport {
    std::string id;
    nlohmann::json config = nlohmann::json::object();
    std::int64_t n = 0;
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ci_level = 0.99;
    double reference = 0.0;
    std::string statistic_name;
    double statistic = 0.0;
    double threshold = 0.0;
    /// true: pass iff statistic <= threshold; false: pass iff statistic >= threshold
    bool pass_below = true;
    bool verdict = false;
    nlohmann::json extra = nlohmann::json::object();

    void decide();
};

nlohmann::json to_json(const SummaryReport& report);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Upper quantile z with P(N(0,1) <= z) = p.
double normal_quantile(double p);

/// Wilson score interval at two-sided confidence `level`.
Interval wilson_ci(std::int64_t successes, std::int64_t trials, double level);

/// Normal-approximation interval for a sample mean.
struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    Interval ci;
};
MeanEstimate mean_ci(std::span<const double> sample, double level);

/// sup_x |F_n(x) - F(x)| for a sorted sample.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Limiting Kolmogorov distribution P(sqrt(n) D_n <= x).
double kolmogorov_cdf(double x);
/// Critical value d with P(D_n > d) ~= alpha, using the finite-n correction
/// sqrt(n) + 0.12 + 0.11/sqrt(n) of Stephens.
double ks_critical(std::int64_t n, double alpha);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    int bins = 0;  // after merging
    double critical = 0.0;
    double expected_total = 0.0;
};

/// Pearson test of a sample against a density on (lo, hi). The range is cut into
/// `bins` cells of equal probability under the density (normalized on (lo, hi)
/// by quadrature); adjacent cells are merged while any expected count is below 5.
ChiSquareResult chisq_vs_density(std::span<const double> sample, const std::function<double(double)>& density,
                                 double lo, double hi, int bins, double alpha);

/// Same test for sample cells whose expected masses are already known.
ChiSquareResult chisq_counts(std::span<const std::int64_t> observed, std::span<const double> probabilities,
                             double alpha);

double chisq_quantile(double p, int dof);

struct TailFit {
    double coefficient = 0.0;  // C in P(X > u) ~ C u^slope
    double slope = 0.0;
    bool reliable = true;
    std::vector<double> survival;  // empirical P(X > u) on the grid
};

/// Least squares of log P(X > u) on log u over the grid. Unreliable when the
/// largest grid point has fewer than 100 exceedances.
TailFit tail_coefficient(std::span<const double> sample, std::span<const double> u_grid);

double median(std::vector<double> values);

}  // namespace annulab
