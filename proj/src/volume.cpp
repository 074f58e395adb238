#include <math.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "annulab/combin.hpp"
#include "annulab/kernels.hpp"

namespace annulab {

namespace {

constexpr std::int64_t kExactCells = 128;
constexpr double kBinRatio = 1.25;

double lgam(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// lgamma(y) minus its Stirling main part (y - 1/2) log y - y + log(2 pi)/2
double stirling_rest(double y) {
    if (y < 10.0) return lgam(y) - ((y - 0.5) * std::log(y) - y + kHalfLog2Pi);
    const double r = 1.0 / y, r2 = r * r;
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)));
}

// Past this k the three lgamma terms are large enough that their difference loses
// digits; the Stirling form cancels the parts linear in k exactly.
constexpr double kStirlingFrom = 64.0;

}  // namespace

struct VolumeSampler::Table {
    std::int64_t boundary = 0;
    // cumulative mass over cells: [0, kExactCells) exact, then one per bin, then the tail
    std::vector<double> cumulative;
    std::vector<std::int64_t> bin_lo;
    std::vector<std::int64_t> bin_hi;  // exclusive
    std::vector<double> bin_envelope;
    double tail_start = 0.0;  // first integer handled by the power tail
    double total = 0.0;
};

double VolumeSampler::log_pmf(std::int64_t n, double k) {
    if (n < 1) throw std::domain_error("VolumeSampler: boundary length must be positive");
    if (k < 0.0) return -std::numeric_limits<double>::infinity();
    if (n == 1 && k == 0.0) return -std::numeric_limits<double>::infinity();
    const double nn = static_cast<double>(n);
    if (k >= kStirlingFrom) {
        // Gamma(A) / (Gamma(B) Gamma(C)) with A = 1.5k + n - 1.5, B = 0.5k + n + 0.5, C = k + 1;
        // the k log terms cancel against 8^k / base^k.
        const double A = 1.5 * k + nn - 1.5, B = 0.5 * k + nn + 0.5, C = k + 1.0;
        const double s = (A - 0.5) * std::log1p((nn - 1.5) / (1.5 * k)) -
                         (B - 0.5) * std::log1p((nn + 0.5) / (0.5 * k)) - (C - 0.5) * std::log1p(1.0 / k) +
                         stirling_rest(A) - stirling_rest(B) - stirling_rest(C);
        return 3.0 - 4.0 * std::log(2.0) - kHalfLog2Pi - 2.5 * std::log(k) + (nn - 2.0) * std::log(1.5) +
               nn * std::log(2.0) + s + std::log(nn) + default_enum_cache().log_central_binomial(n) - log_z1(n);
    }
    // Same-parity double factorial ratio a!!/b!! = 2^{(a-b)/2} Gamma(a/2+1)/Gamma(b/2+1),
    // a = 2n + 3k - 5, b = 2n + k - 1.
    const double log_card = (k - 1.0) * std::log(4.0) + (k - 2.0) * std::log(2.0) +
                            lgam(nn + 1.5 * k - 1.5) - lgam(nn + 0.5 * k + 0.5) - lgam(k + 1.0) +
                            std::log(nn) + default_enum_cache().log_central_binomial(n);
    return log_card - k * std::log(kBoltzmannBase) - log_z1(n);
}

VolumeSampler::VolumeSampler(std::int64_t max_boundary)
    : max_boundary_(max_boundary),
      tables_(static_cast<std::size_t>(kDirectSlots)),
      once_(new std::once_flag[static_cast<std::size_t>(kDirectSlots)]),
      large_mu_(std::make_unique<std::mutex>()) {
    if (max_boundary < 1) throw std::domain_error("VolumeSampler: max_boundary must be positive");
}

VolumeSampler::~VolumeSampler() = default;
VolumeSampler::VolumeSampler(VolumeSampler&&) noexcept = default;
VolumeSampler& VolumeSampler::operator=(VolumeSampler&&) noexcept = default;

double VolumeSampler::pmf(std::int64_t n, std::int64_t k) const {
    if (n < 1) throw std::domain_error("VolumeSampler: boundary length must be positive");
    if (k < 0 || (n == 1 && k == 0)) return 0.0;
    return std::exp(log_card_t1(n, k) - static_cast<double>(k) * std::log(kBoltzmannBase) - log_z1(n));
}

const VolumeSampler::Table& VolumeSampler::table(std::int64_t n) const {
    if (n < 1 || n > max_boundary_) {
        throw std::out_of_range("VolumeSampler: boundary length " + std::to_string(n) +
                                " outside capacity " + std::to_string(max_boundary_));
    }
    if (n < kDirectSlots) {
        const auto idx = static_cast<std::size_t>(n);
        std::call_once(once_[idx], [&] { tables_[idx] = build_table(n); });
        return *tables_[idx];
    }
    std::lock_guard<std::mutex> lock(*large_mu_);
    auto& slot = large_[n];
    if (!slot) slot = build_table(n);
    return *slot;
}

std::unique_ptr<VolumeSampler::Table> VolumeSampler::build_table(std::int64_t n) {
    auto t = std::make_unique<Table>();
    t->boundary = n;
    const double nn = static_cast<double>(n);
    const double tail_start = std::max(1e6, 1e4 * nn * nn);
    t->tail_start = tail_start;

    auto f = [n](double x) { return std::exp(log_pmf(n, x)); };

    // Continuous mode of the unimodal pmf, by golden section on log k.
    double lo = 0.0, hi = std::log(tail_start);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
        const double a = hi - g * (hi - lo);
        const double b = lo + g * (hi - lo);
        if (log_pmf(n, std::exp(a)) < log_pmf(n, std::exp(b))) lo = a; else hi = b;
    }
    const double mode = std::exp(0.5 * (lo + hi));

    double acc = 0.0;
    t->cumulative.reserve(kExactCells + 256);
    for (std::int64_t k = 0; k < kExactCells; ++k) {
        acc += k == 0 && n == 1 ? 0.0
                                : std::exp(log_card_t1(n, k) - static_cast<double>(k) * std::log(kBoltzmannBase) -
                                           log_z1(n));
        t->cumulative.push_back(acc);
    }

    // Sum_{k=lo}^{hi-1} f(k) = int_{lo-1/2}^{hi-1/2} f - [f'(hi-1/2) - f'(lo-1/2)]/24 + ...
    auto deriv = [&](double x) {
        const double h = 1e-4 * x;
        return (f(x + h) - f(x - h)) / (2.0 * h);
    };
    std::int64_t edge = kExactCells;
    while (static_cast<double>(edge) < tail_start) {
        std::int64_t next = std::max<std::int64_t>(
            edge + 1, static_cast<std::int64_t>(std::ceil(static_cast<double>(edge) * kBinRatio)));
        if (static_cast<double>(next) > tail_start) next = static_cast<std::int64_t>(tail_start);
        const double a = static_cast<double>(edge) - 0.5;
        const double b = static_cast<double>(next) - 0.5;
        // integrate in log x, where the pmf is smooth and slowly varying
        const double integral = boost::math::quadrature::gauss<double, 20>::integrate(
            [&](double s) {
                const double x = std::exp(s);
                return f(x) * x;
            },
            std::log(a), std::log(b));
        const double mass = integral - (deriv(b) - deriv(a)) / 24.0;
        acc += std::max(mass, 0.0);
        t->cumulative.push_back(acc);
        t->bin_lo.push_back(edge);
        t->bin_hi.push_back(next);
        double env = std::max(f(static_cast<double>(edge)), f(static_cast<double>(next - 1)));
        if (mode >= static_cast<double>(edge) && mode <= static_cast<double>(next - 1)) {
            env = std::max(env, f(mode));
        }
        t->bin_envelope.push_back(env * (1.0 + 1e-9));
        edge = next;
    }

    // Power tail c k^{-5/2} from tail_start on, summed as an integral from tail_start - 1/2.
    const double c = f(tail_start) * std::pow(tail_start, 2.5);
    acc += (2.0 / 3.0) * c * std::pow(tail_start - 0.5, -1.5);
    t->cumulative.push_back(acc);
    t->total = acc;
    return t;
}

double VolumeSampler::table_mass(std::int64_t n) const { return table(n).total; }

double VolumeSampler::tail_start(std::int64_t n) const { return table(n).tail_start; }

std::int64_t VolumeSampler::sample(std::int64_t n, Rng& rng) const {
    const Table& t = table(n);
    const double u = uniform01(rng) * t.total;
    const auto it = std::upper_bound(t.cumulative.begin(), t.cumulative.end(), u);
    auto cell = static_cast<std::size_t>(it - t.cumulative.begin());
    if (cell >= t.cumulative.size()) cell = t.cumulative.size() - 1;

    if (cell < static_cast<std::size_t>(kExactCells)) return static_cast<std::int64_t>(cell);

    const std::size_t bin = cell - static_cast<std::size_t>(kExactCells);
    if (bin < t.bin_lo.size()) {
        const std::int64_t lo = t.bin_lo[bin];
        const auto width = static_cast<double>(t.bin_hi[bin] - lo);
        for (;;) {
            const std::int64_t k = lo + std::min(static_cast<std::int64_t>(uniform01(rng) * width),
                                                 t.bin_hi[bin] - lo - 1);
            if (uniform01(rng) * t.bin_envelope[bin] <= std::exp(log_pmf(n, static_cast<double>(k)))) {
                return k;
            }
        }
    }

    // P(K >= x) ~ x^{-3/2} past the tail start
    const double x = (t.tail_start - 0.5) * std::pow(uniform_open(rng), -2.0 / 3.0);
    const double capped = std::min(x + 0.5, 4e18);
    return std::max(static_cast<std::int64_t>(capped), static_cast<std::int64_t>(t.tail_start));
}

}  // namespace annulab
