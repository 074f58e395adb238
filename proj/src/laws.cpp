#include "annulab/laws.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "annulab/csbp.hpp"

namespace annulab {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kOccupationPrefactor = std::sqrt(3.0 / (2.0 * kPi));

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi, double tol, double abs_floor) {
    thread_local boost::math::quadrature::tanh_sinh<double> quad(15);
    double err = 0.0;
    double l1 = 0.0;
    double v = 0.0;
    try {
        v = quad.integrate(f, lo, hi, tol, &err, &l1);
    } catch (const std::exception& e) {
        throw QuadratureError(std::string("quadrature failed: ") + e.what());
    }
    if (!std::isfinite(v) || !std::isfinite(err) || err > std::max(tol * std::abs(l1) * 100.0, abs_floor)) {
        throw QuadratureError("quadrature did not converge (value " + std::to_string(v) + ", error " +
                              std::to_string(err) + ")");
    }
    return v;
}

double hit_prob(double a, double b) {
    require_positive(a, "hit_prob: a");
    require_positive(b, "hit_prob: b");
    return a / (a + b);
}

double hit_prob_integral_check(double a, double b) {
    require_positive(a, "hit_prob_integral_check: a");
    require_positive(b, "hit_prob_integral_check: b");
    // z = b - w^2 removes the square-root endpoint at z = b
    const double rb = std::sqrt(b);
    const double lhs = integrate(
        [&](double w) {
            const double z = b - w * w;
            return 2.0 * w * std::pow(a + z, -2.5) * (w / rb);
        },
        0.0, rb);
    return std::abs(1.5 * std::pow(a, 1.5) * lhs - b / (a + b));
}

double perimeter_hull_density(double r, double a, double y) {
    require_positive(r, "perimeter_hull_density: r");
    require_positive(a, "perimeter_hull_density: a");
    if (y <= 0.0) return 0.0;
    return 3.0 * kOccupationPrefactor / (r * r * r) * (a / (a + y)) * std::sqrt(y) *
           std::exp(-1.5 * y / (r * r));
}

double perimeter_hull_laplace(double r, double a, double lambda) {
    if (lambda < 0.0) throw std::domain_error("perimeter_hull_laplace: lambda must be nonnegative");
    // y = s^2
    return integrate(
        [&](double s) {
            const double y = s * s;
            return 2.0 * s * perimeter_hull_density(r, a, y) * std::exp(-lambda * y);
        },
        0.0, std::numeric_limits<double>::infinity());
}

double perimeter_hull_mass(double r, double a) { return perimeter_hull_laplace(r, a, 0.0); }

double expected_length(double a, double b) {
    require_positive(a, "expected_length: a");
    require_positive(b, "expected_length: b");
    return std::sqrt(1.5 * kPi) * (a + b) *
           (std::sqrt(1.0 / a) + std::sqrt(1.0 / b) - std::sqrt(1.0 / a + 1.0 / b));
}

double tail_asymptote(double a, double b, double u) {
    require_positive(u, "tail_asymptote: u");
    return 3.0 * (a + b) / (u * u);
}

double extinction_cdf(double x, double t) {
    if (x < 0.0) throw std::domain_error("extinction_cdf: x must be nonnegative");
    require_positive(t, "extinction_cdf: t");
    return std::exp(-1.5 * x / (t * t));
}

double levy_never_hits(double z, double b) {
    require_positive(b, "levy_never_hits: b");
    if (z < 0.0) throw std::domain_error("levy_never_hits: z must be nonnegative");
    return std::sqrt(std::max(b - z, 0.0) / b);
}

double cemetery_asymptote(double x) {
    require_positive(x, "cemetery_asymptote: x");
    return std::sqrt(3.0 * kPi) / 4.0 / std::sqrt(x) * std::pow(1.0 + x, -1.5);
}

double scale_w(double u) {
    if (u < 0.0) throw std::domain_error("scale_w: u must be nonnegative");
    return std::sqrt(3.0 * u / (2.0 * kPi));
}

double scale_wtilde(double x) {
    if (x < 0.0) throw std::domain_error("scale_wtilde: x must be nonnegative");
    return 2.0 * std::sqrt(3.0) * std::sqrt(x) / std::sqrt(kPi);
}

double scale_w_laplace_residual(double lambda) {
    require_positive(lambda, "scale_w_laplace_residual: lambda");
    const double v = integrate([&](double u) { return std::exp(-lambda * u) * scale_w(u); }, 0.0,
                               std::numeric_limits<double>::infinity());
    return std::abs(v - 1.0 / psi(lambda));
}

double scale_wtilde_laplace_residual(double lambda) {
    require_positive(lambda, "scale_wtilde_laplace_residual: lambda");
    const double v = integrate([&](double x) { return std::exp(-lambda * x) * scale_wtilde(x); }, 0.0,
                               std::numeric_limits<double>::infinity());
    return std::abs(v - std::sqrt(3.0) * std::pow(lambda, -1.5));
}

double occupation_density(double y) {
    require_positive(y, "occupation_density: y");
    return kOccupationPrefactor / (std::sqrt(y) * (1.0 + y));
}

double occupation_expectation(const std::function<double(double)>& f) {
    // y = s^2: the y^{-1/2} singularity becomes 2 / (1 + s^2)
    const double v = integrate(
        [&](double s) {
            const double y = s * s;
            return 2.0 * f(y) / (1.0 + y);
        },
        0.0, std::numeric_limits<double>::infinity(), 1e-10, 1e-12);
    return kOccupationPrefactor * v;
}

double exit_laplace(double mu, double s) {
    require_positive(mu, "exit_laplace: mu");
    const double d = 1.0 / std::sqrt(mu) + std::sqrt(2.0 / 3.0) * std::abs(s);
    return 1.0 / (d * d);
}

double convolution_identity_check(double a, double y) {
    require_positive(a, "convolution_identity_check: a");
    require_positive(y, "convolution_identity_check: y");
    // y - z = w^2
    const double lhs = integrate([&](double w) { return 2.0 * std::pow(a + y - w * w, -1.5); }, 0.0, std::sqrt(y));
    return std::abs(lhs - 2.0 * std::sqrt(y) / (std::sqrt(a) * (a + y)));
}

double normalization_identity_check() {
    const double inner = integrate([](double x) { return std::pow(1.0 + x, -2.5); }, 0.0,
                                   std::numeric_limits<double>::infinity());
    return std::abs(std::sqrt(3.0 * kPi) / 4.0 * (2.0 * std::sqrt(3.0) / std::sqrt(kPi)) * inner - 1.0);
}

}  // namespace annulab
