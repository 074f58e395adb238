#include "annulab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace annulab {

void SummaryReport::decide() {
    verdict = std::isfinite(statistic) && (pass_below ? statistic <= threshold : statistic >= threshold);
}

nlohmann::json to_json(const SummaryReport& r) {
    auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return nullptr;
    };
    nlohmann::json j;
    j["schema"] = 1;
    j["id"] = r.id;
    j["config"] = r.config;
    j["n"] = r.n;
    j["estimate"] = num(r.estimate);
    j["ci"] = {num(r.ci_low), num(r.ci_high)};
    j["ci_level"] = r.ci_level;
    j["reference"] = num(r.reference);
    j["statistic_name"] = r.statistic_name;
    j["statistic"] = num(r.statistic);
    j["threshold"] = num(r.threshold);
    j["pass_if"] = r.pass_below ? "statistic <= threshold" : "statistic >= threshold";
    j["verdict"] = r.verdict ? "pass" : "fail";
    if (!r.extra.empty()) j["details"] = r.extra;
    return j;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval wilson_ci(std::int64_t successes, std::int64_t trials, double level) {
    if (trials < 1 || successes < 0 || successes > trials) {
        throw std::domain_error("wilson_ci: need 0 <= successes <= trials, trials >= 1");
    }
    const double z = normal_quantile(0.5 + 0.5 * level);
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.low = 0.0;
    if (successes == trials) ci.high = 1.0;
    // guard the estimate against rounding at the ends
    ci.low = std::min(ci.low, p);
    ci.high = std::max(ci.high, p);
    return ci;
}

MeanEstimate mean_ci(std::span<const double> x, double level) {
    if (x.empty()) throw std::domain_error("mean_ci: empty sample");
    long double s = 0.0L;
    for (double v : x) s += v;
    const double mean = static_cast<double>(s / static_cast<long double>(x.size()));
    long double ss = 0.0L;
    for (double v : x) ss += static_cast<long double>(v - mean) * (v - mean);
    const double n = static_cast<double>(x.size());
    const double var = x.size() > 1 ? static_cast<double>(ss) / (n - 1.0) : 0.0;
    MeanEstimate m;
    m.mean = mean;
    m.std_error = std::sqrt(var / n);
    const double z = normal_quantile(0.5 + 0.5 * level);
    m.ci = {mean - z * m.std_error, mean + z * m.std_error};
    return m;
}

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
    if (sorted.empty()) throw std::domain_error("ks_statistic: empty sample");
    if (!std::is_sorted(sorted.begin(), sorted.end())) throw std::invalid_argument("ks_statistic: sample not sorted");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x < 1.0) {
        // theta-function form converges fast for small x
        constexpr double pi = 3.14159265358979323846;
        const double c = pi * pi / (8.0 * x * x);
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double t = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * c);
            s += t;
            if (t < 1e-18) break;
        }
        return std::sqrt(2.0 * pi) / x * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double t = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? t : -t);
        if (t < 1e-18) break;
    }
    return 1.0 - 2.0 * s;
}

double ks_critical(std::int64_t n, double alpha) {
    if (n < 1 || !(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("ks_critical: bad arguments");
    double lo = 0.1, hi = 5.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (kolmogorov_cdf(mid) < 1.0 - alpha) lo = mid; else hi = mid;
    }
    const double sn = std::sqrt(static_cast<double>(n));
    return 0.5 * (lo + hi) / (sn + 0.12 + 0.11 / sn);
}

double chisq_quantile(double p, int dof) {
    if (dof < 1) throw std::domain_error("chisq_quantile: dof must be positive");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

ChiSquareResult chisq_counts(std::span<const std::int64_t> observed, std::span<const double> prob, double alpha) {
    if (observed.size() != prob.size() || observed.size() < 2) {
        throw std::invalid_argument("chisq_counts: need matching cells, at least two");
    }
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::int64_t{0}));
    const double mass = std::accumulate(prob.begin(), prob.end(), 0.0);

    std::vector<double> exp_cells;
    std::vector<double> obs_cells;
    double e = 0.0, o = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        e += n * prob[i] / mass;
        o += static_cast<double>(observed[i]);
        if (e >= 5.0) {
            exp_cells.push_back(e);
            obs_cells.push_back(o);
            e = o = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (exp_cells.empty()) {
            exp_cells.push_back(e);
            obs_cells.push_back(o);
        } else {
            exp_cells.back() += e;
            obs_cells.back() += o;
        }
    }

    ChiSquareResult r;
    r.bins = static_cast<int>(exp_cells.size());
    r.dof = r.bins - 1;
    for (std::size_t i = 0; i < exp_cells.size(); ++i) {
        const double d = obs_cells[i] - exp_cells[i];
        r.statistic += d * d / exp_cells[i];
        r.expected_total += exp_cells[i];
    }
    r.critical = r.dof >= 1 ? chisq_quantile(1.0 - alpha, r.dof) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

ChiSquareResult chisq_vs_density(std::span<const double> sample, const std::function<double(double)>& density,
                                 double lo, double hi, int bins, double alpha) {
    if (bins < 5) throw std::invalid_argument("chisq_vs_density: need at least 5 bins");
    if (sample.empty()) throw std::invalid_argument("chisq_vs_density: empty sample");
    if (!(hi > lo)) throw std::invalid_argument("chisq_vs_density: empty range");

    boost::math::quadrature::tanh_sinh<double> q;
    auto mass_between = [&](double a, double b) {
        if (!(b > a)) return 0.0;
        double err = 0.0;
        const double v = q.integrate(density, a, b, 1e-10, &err);
        if (!std::isfinite(v)) throw std::runtime_error("chisq_vs_density: density quadrature failed");
        return v;
    };
    const double total = mass_between(lo, hi);
    if (!(total > 0.0)) throw std::runtime_error("chisq_vs_density: density has no mass on the range");

    // equal-probability edges; each found by bisection on the running cell mass
    std::vector<double> edges{lo};
    double left = lo;
    const double target = total / bins;
    const double far = std::isfinite(hi) ? hi : std::max(1.0, std::abs(lo)) * 1e6;
    for (int j = 1; j < bins; ++j) {
        double a = left, b = far;
        for (int it = 0; it < 100 && (b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
            const double mid = 0.5 * (a + b);
            if (mass_between(left, mid) < target) a = mid; else b = mid;
        }
        left = 0.5 * (a + b);
        edges.push_back(left);
    }
    edges.push_back(hi);

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::int64_t> observed(static_cast<std::size_t>(bins), 0);
    std::vector<double> prob(static_cast<std::size_t>(bins), 1.0 / bins);
    for (double x : sorted) {
        // points outside (lo, hi) fall into the end cells
        auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, x);
        observed[static_cast<std::size_t>(it - (edges.begin() + 1))] += 1;
    }
    return chisq_counts(observed, prob, alpha);
}

TailFit tail_coefficient(std::span<const double> sample, std::span<const double> u_grid) {
    if (sample.empty() || u_grid.empty()) throw std::invalid_argument("tail_coefficient: empty input");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());

    TailFit fit;
    std::vector<double> xs, ys;
    std::int64_t last_count = 0;
    for (double u : u_grid) {
        if (!(u > 0.0)) throw std::invalid_argument("tail_coefficient: grid must be positive");
        const auto count = static_cast<std::int64_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), u));
        fit.survival.push_back(static_cast<double>(count) / n);
        last_count = count;
        if (count > 0) {
            xs.push_back(std::log(u));
            ys.push_back(std::log(static_cast<double>(count) / n));
        }
    }
    fit.reliable = last_count >= 100;
    if (xs.size() == 1) {
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        fit.coefficient = std::exp(ys[0]);
        fit.reliable = false;
        return fit;
    }
    if (xs.empty()) {
        fit.slope = -std::numeric_limits<double>::infinity();
        fit.coefficient = 0.0;
        fit.reliable = false;
        return fit;
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.slope = sxy / sxx;
    fit.coefficient = std::exp(my - fit.slope * mx);
    return fit;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty input");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace annulab
