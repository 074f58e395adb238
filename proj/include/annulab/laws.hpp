#pragma once

// Closed-form laws of the Brownian annulus and the CSBP, and the quadrature
// checks of the identities behind them.

#include <functional>
#include <stdexcept>

namespace annulab {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// int_lo^hi f, finite or infinite bounds, tanh-sinh with a relative target.
/// Throws QuadratureError on a non-finite result or an error estimate above
/// max(tol * |value|, abs_floor).
double integrate(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12,
                 double abs_floor = 1e-10);

double hit_prob(double a, double b);
/// | (3/2) a^{3/2} int_0^b (a+z)^{-5/2} sqrt((b-z)/b) dz - b/(a+b) |
double hit_prob_integral_check(double a, double b);

double perimeter_hull_density(double r, double a, double y);
/// int_0^inf perimeter_hull_density(r, a, y) dy, i.e. the probability that the hull
/// of radius r is defined.
double perimeter_hull_mass(double r, double a);
/// int_0^inf e^{-l y} perimeter_hull_density(r, a, y) dy
double perimeter_hull_laplace(double r, double a, double lambda);

double expected_length(double a, double b);
double tail_asymptote(double a, double b, double u);
double extinction_cdf(double x, double t);
double levy_never_hits(double z, double b);

/// Limit of L^{3/2} q_L(floor(xL), cemetery).
double cemetery_asymptote(double x);

double scale_w(double u);
double scale_wtilde(double x);
/// | int_0^inf e^{-l u} W(u) du - 1/psi(l) |
double scale_w_laplace_residual(double lambda);
/// | int_0^inf e^{-l x} W~(x) dx - sqrt(3) l^{-3/2} |
double scale_wtilde_laplace_residual(double lambda);

/// Occupation density of the CSBP started from the a = 1 initial law:
/// E int f(Z_t) dt = int f(y) occupation_density(y) dy.
double occupation_density(double y);
/// int f(y) occupation_density(y) dy. Throws QuadratureError when it diverges.
double occupation_expectation(const std::function<double(double)>& f);

double exit_laplace(double mu, double s);

/// | int_0^y (a+z)^{-3/2} (y-z)^{-1/2} dz - 2 sqrt(y) / (sqrt(a) (a+y)) |
double convolution_identity_check(double a, double y);
/// | (sqrt(3 pi)/4) (2 sqrt 3 / sqrt pi) int_0^inf (1+x)^{-5/2} dx - 1 |
double normalization_identity_check();

}  // namespace annulab
