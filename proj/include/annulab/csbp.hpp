#pragma once

// The psi(l) = sqrt(8/3) l^{3/2} branching process, simulated through the Lamperti
// time change of a centered spectrally positive 3/2-stable Levy process.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "annulab/rng.hpp"

namespace annulab {

inline constexpr double kPsiCoefficient = 1.6329931618554520655;  // sqrt(8/3)

double psi(double lambda);

/// Increments of the Levy process with E[exp(-l X_s)] = exp(s psi(l)), s > 0.
///
/// Drawn by Chambers-Mallows-Stuck as sigma * S(1.5, beta = 1). For alpha = 3/2 and
/// beta = 1 the standard variable has E[exp(-l S)] = exp(sqrt(2) l^{3/2}) (since
/// cos(3 pi / 4) = -1/sqrt 2), so sigma = (s sqrt(4/3))^{2/3}. The mean is 0.
class StableSampler {
public:
    /// Standard totally skewed variable: E exp(-l S) = exp(sqrt(2) l^{3/2}).
    static double standard(Rng& rng);
    static double scale_for(double levy_time);
    static double increment(double levy_time, Rng& rng) { return scale_for(levy_time) * standard(rng); }
};

/// Initial perimeter with density (3/2) a^{3/2} (a + z)^{-5/2} on (0, inf).
double sample_initial_perimeter(double a, Rng& rng);
double initial_perimeter_cdf(double a, double z);
/// Inverse of the CDF above; u in [0, 1).
double initial_perimeter_quantile(double a, double u);

/// Exact extinction time from x: P_x(T <= t) = exp(-3x / (2t^2)).
double sample_extinction_time(double x, Rng& rng);

struct CsbpOptions {
    double dt = 1e-3;
    double horizon = 1e4;
    /// values at or below this are absorbed at 0
    double floor = 1e-8;
};

struct CsbpPath {
    double dt = 0.0;
    double z0 = 0.0;
    /// values[n] approximates Z at time n * dt
    std::vector<double> values;
    std::optional<double> extinction_time;
    double running_max = 0.0;
    /// horizon reached before extinction
    bool censored = false;

    double time_at(std::size_t n) const { return static_cast<double>(n) * dt; }
};

/// Euler-Lamperti scheme: each CSBP step of size dt consumes Levy time dt * Z_n,
/// Z_{n+1} = Z_n + X(dt Z_n). Reuses `path`'s storage.
void simulate_csbp(double z0, const CsbpOptions& opt, Rng& rng, CsbpPath& path);
CsbpPath simulate_csbp(double z0, const CsbpOptions& opt, Rng& rng);

/// No negative jumps, so the path meets b iff its running maximum reaches b.
bool visits_level(const CsbpPath& path, double b);

/// Last down-crossing of b, linearly interpolated between the bracketing grid
/// points. Empty when b is never visited. A censored path that is still above b
/// at the horizon returns the horizon.
std::optional<double> last_passage(const CsbpPath& path, double b);

/// Z at time (extinction - r), read off the grid; empty unless extinction > r.
std::optional<double> perimeter_at_radius(const CsbpPath& path, double r);

/// sum_n f(Z_n) dt over the lifetime. Requires f(0) = 0.
double occupation_integral(const CsbpPath& path, const std::function<double(double)>& f);

}  // namespace annulab
