#include "annulab/csbp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace annulab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlpha = 1.5;
// B = arctan(beta tan(pi alpha / 2)) / alpha with tan(3 pi / 4) = -1
constexpr double kShift = -kPi / 6.0;
// (1 + beta^2 tan^2(pi alpha / 2))^{1 / (2 alpha)} = 2^{1/3}
constexpr double kSkewScale = 1.2599210498948731648;

}  // namespace

double psi(double lambda) {
    if (lambda < 0.0) throw std::domain_error("psi: lambda must be nonnegative");
    return kPsiCoefficient * lambda * std::sqrt(lambda);
}

double StableSampler::standard(Rng& rng) {
    const double v = kPi * (uniform_open(rng) - 0.5);
    const double w = exponential1(rng);
    const double cv = std::cos(v);
    const double t = kAlpha * (v + kShift);
    return kSkewScale * std::sin(t) * std::cbrt(w / (cv * cv * std::cos(v - t)));
}

double StableSampler::scale_for(double levy_time) {
    // (s sqrt(4/3))^{2/3} = cbrt(4 s^2 / 3)
    return std::cbrt(levy_time * levy_time * (4.0 / 3.0));
}

double initial_perimeter_cdf(double a, double z) {
    if (!(a > 0.0)) throw std::domain_error("initial_perimeter_cdf: a must be positive");
    if (z <= 0.0) return 0.0;
    return 1.0 - std::pow(a / (a + z), 1.5);
}

double initial_perimeter_quantile(double a, double u) {
    if (!(a > 0.0)) throw std::domain_error("initial_perimeter_quantile: a must be positive");
    if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("initial_perimeter_quantile: u must be in [0,1)");
    return a * (std::pow(1.0 - u, -2.0 / 3.0) - 1.0);
}

double sample_initial_perimeter(double a, Rng& rng) { return initial_perimeter_quantile(a, uniform01(rng)); }

double sample_extinction_time(double x, Rng& rng) {
    if (x < 0.0) throw std::domain_error("sample_extinction_time: x must be nonnegative");
    if (x == 0.0) return 0.0;
    return std::sqrt(3.0 * x / (-2.0 * std::log(uniform_open(rng))));
}

void simulate_csbp(double z0, const CsbpOptions& opt, Rng& rng, CsbpPath& path) {
    if (!(opt.dt > 0.0)) throw std::domain_error("simulate_csbp: dt must be positive");
    if (!(opt.horizon > 0.0)) throw std::domain_error("simulate_csbp: horizon must be positive");
    if (z0 < 0.0 || !std::isfinite(z0)) throw std::domain_error("simulate_csbp: z0 must be finite and nonnegative");

    path.dt = opt.dt;
    path.z0 = z0;
    path.values.clear();
    path.extinction_time.reset();
    path.censored = false;

    double z = z0 <= opt.floor ? 0.0 : z0;
    double zmax = z;
    path.values.push_back(z);
    const auto max_steps = static_cast<std::size_t>(std::ceil(opt.horizon / opt.dt));
    std::size_t n = 0;
    while (z > 0.0) {
        if (n >= max_steps) {
            path.censored = true;
            break;
        }
        z += StableSampler::increment(opt.dt * z, rng);
        if (z <= opt.floor) z = 0.0;
        zmax = std::max(zmax, z);
        path.values.push_back(z);
        ++n;
    }
    if (!path.censored) path.extinction_time = path.time_at(path.values.size() - 1);
    path.running_max = zmax;
}

CsbpPath simulate_csbp(double z0, const CsbpOptions& opt, Rng& rng) {
    CsbpPath path;
    simulate_csbp(z0, opt, rng, path);
    return path;
}

bool visits_level(const CsbpPath& path, double b) { return path.running_max >= b; }

std::optional<double> last_passage(const CsbpPath& path, double b) {
    if (!visits_level(path, b)) return std::nullopt;
    const auto& v = path.values;
    std::size_t n = v.size();
    while (n > 0 && v[n - 1] < b) --n;
    // v[n-1] >= b, v[n] < b
    if (n == 0) return std::nullopt;
    if (n == v.size()) return path.time_at(n - 1);
    const double hi = v[n - 1], lo = v[n];
    const double frac = hi > lo ? (hi - b) / (hi - lo) : 0.0;
    return (static_cast<double>(n - 1) + frac) * path.dt;
}

std::optional<double> perimeter_at_radius(const CsbpPath& path, double r) {
    if (!(r > 0.0)) throw std::domain_error("perimeter_at_radius: r must be positive");
    if (!path.extinction_time || *path.extinction_time <= r) return std::nullopt;
    const std::size_t last = path.values.size() - 1;
    // grid index of extinction - r, rounded down
    const auto back = static_cast<std::size_t>(std::ceil(r / path.dt - 1e-9));
    if (back > last) return std::nullopt;
    return path.values[last - back];
}

double occupation_integral(const CsbpPath& path, const std::function<double(double)>& f) {
    if (f(0.0) != 0.0) throw std::invalid_argument("occupation_integral: f(0) must be 0");
    long double s = 0.0L;
    for (double z : path.values) {
        if (z <= 0.0) break;
        s += f(z);
    }
    return static_cast<double>(s) * path.dt;
}

}  // namespace annulab
