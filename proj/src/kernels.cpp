#include "annulab/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "annulab/combin.hpp"

namespace annulab {

namespace {

void check_move(std::int64_t k, std::int64_t m) {
    if (k < 1) throw std::out_of_range("perimeter must be at least 1");
    if (m < -1 || m > k - 1) {
        throw std::out_of_range("perimeter decrease " + std::to_string(m) + " outside [-1, " +
                                std::to_string(k - 1) + "]");
    }
}

}  // namespace

double q_inf(std::int64_t k, std::int64_t m) {
    check_move(k, m);
    return 2.0 * std::exp(log_z1(m + 1) + log_c1(k - m) - log_c1(k));
}

double q_L(std::int64_t L, std::int64_t k, std::int64_t m) {
    if (L < 1) throw std::domain_error("q_L: boundary length must be positive");
    return harmonic(L, k - m) / harmonic(L, k) * q_inf(k, m);
}

double cemetery_prob(std::int64_t L, std::int64_t k) {
    if (L < 1 || k < 1) throw std::domain_error("cemetery_prob: need L, k >= 1");
    long double total = 0.0L;
    for (std::int64_t m = -1; m <= k - 1; ++m) total += q_L(L, k, m);
    const double rest = static_cast<double>(1.0L - total);
    return rest < 0.0 ? 0.0 : rest;
}

double q_L_partition_ratio(std::int64_t L, std::int64_t k, std::int64_t m, double rel_tol) {
    check_move(k, m);
    return 2.0 * z1(m + 1) * z2_series(L, k - m, rel_tol) / z2_series(L, k, rel_tol);
}

KernelTable::KernelTable(std::int64_t boundary, std::int64_t max_perimeter)
    : boundary_(boundary), max_perimeter_(max_perimeter) {
    if (max_perimeter < 1) throw std::domain_error("KernelTable: max_perimeter must be positive");
    swallow_weight_.resize(static_cast<std::size_t>(max_perimeter + 1));
    swallow_weight_[0] = 2.0 * z1(0) * 12.0;
    for (std::int64_t m = 0; m <= max_perimeter - 1; ++m) {
        swallow_weight_[static_cast<std::size_t>(m + 1)] = std::exp(
            std::log(2.0) + log_z1(m + 1) - static_cast<double>(m) * std::log(12.0));
    }
}

KernelTable KernelTable::uipt(std::int64_t max_perimeter) { return KernelTable(0, max_perimeter); }

KernelTable KernelTable::boltzmann_disk(std::int64_t boundary, std::int64_t max_perimeter) {
    if (boundary < 1) throw std::domain_error("boltzmann_disk: boundary length must be positive");
    return KernelTable(boundary, max_perimeter);
}

double KernelTable::swallow_weight(std::int64_t m) const {
    const auto i = static_cast<std::size_t>(m + 1);
    if (i < swallow_weight_.size()) return swallow_weight_[i];
    return std::exp(std::log(2.0) + log_z1(m + 1) - static_cast<double>(m) * std::log(12.0));
}

template <class Fn>
long double KernelTable::walk_row(std::int64_t k, Fn&& fn) const {
    const double L = static_cast<double>(boundary_);
    const double kk = static_cast<double>(k);
    // m = -1: D(k+1) / D(k) = (2k+1) / (2k)
    double w = swallow_weight_[0] * (2.0 * kk + 1.0) / (2.0 * kk);
    if (boundary_ > 0) w *= (L + kk) / (L + kk + 1.0);
    long double acc = w;
    if (fn(std::int64_t{-1}, w)) return acc;
    double ratio = 1.0;  // D(k-m) / D(k)
    for (std::int64_t m = 0; m <= k - 1; ++m) {
        if (m > 0) {
            const double j = static_cast<double>(k - m);
            ratio *= 2.0 * j / (2.0 * j + 1.0);
        }
        w = swallow_weight(m) * ratio;
        if (boundary_ > 0) w *= (L + kk) / (L + kk - static_cast<double>(m));
        acc += w;
        if (fn(m, w)) return acc;
    }
    return acc;
}

double KernelTable::prob(std::int64_t k, std::int64_t m) const {
    check_move(k, m);
    double out = 0.0;
    walk_row(k, [&](std::int64_t mm, double w) {
        if (mm == m) {
            out = w;
            return true;
        }
        return false;
    });
    return out;
}

double KernelTable::cemetery(std::int64_t k) const {
    if (k < 1) throw std::out_of_range("perimeter must be at least 1");
    if (!is_finite()) return 0.0;
    const long double total = walk_row(k, [](std::int64_t, double) { return false; });
    const double rest = static_cast<double>(1.0L - total);
    return rest < 0.0 ? 0.0 : rest;
}

std::vector<double> KernelTable::row(std::int64_t k) const {
    if (k < 1) throw std::out_of_range("perimeter must be at least 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k + 1));
    walk_row(k, [&](std::int64_t, double w) {
        out.push_back(w);
        return false;
    });
    return out;
}

StepOutcome KernelTable::sample(std::int64_t k, Rng& rng) const {
    if (k < 1) throw std::out_of_range("perimeter must be at least 1");
    for (;;) {
        const double u = uniform01(rng);
        StepOutcome out{true, 0};
        double acc = 0.0;
        walk_row(k, [&](std::int64_t m, double w) {
            acc += w;
            if (u < acc) {
                out = StepOutcome{false, m};
                return true;
            }
            return false;
        });
        if (!out.cemetery || is_finite()) return out;
        // Infinite regime: the row sums to 1 up to rounding; redraw on the sliver.
    }
}

KernelRows materialize_rows(const KernelTable& table) {
    KernelRows out;
    out.finite = table.is_finite();
    out.boundary = table.boundary();
    out.max_perimeter = table.max_perimeter();
    out.rows.reserve(static_cast<std::size_t>(table.max_perimeter()));
    for (std::int64_t k = 1; k <= table.max_perimeter(); ++k) {
        auto r = table.row(k);
        r.push_back(table.cemetery(k));
        out.rows.push_back(std::move(r));
    }
    return out;
}

namespace {

constexpr char kCacheMagic[8] = {'A', 'N', 'L', 'B', 'K', 'R', 'N', '1'};
constexpr std::uint32_t kCacheVersion = 1;

template <class U>
void put_le(std::ostream& os, U v) {
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
    unsigned char bytes[sizeof(U)];
    is.read(reinterpret_cast<char*>(bytes), sizeof(U));
    if (!is) throw std::runtime_error("kernel cache: truncated file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void write_kernel_cache(const std::filesystem::path& path, const KernelTable& table) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("kernel cache: cannot open " + path.string());
    os.write(kCacheMagic, sizeof kCacheMagic);
    put_le<std::uint32_t>(os, kCacheVersion);
    put_le<std::uint32_t>(os, table.is_finite() ? 0u : 1u);
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(table.boundary()));
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(table.max_perimeter()));
    for (std::int64_t k = 1; k <= table.max_perimeter(); ++k) {
        for (double p : table.row(k)) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(p));
        put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(table.cemetery(k)));
    }
    if (!os) throw std::runtime_error("kernel cache: write failed for " + path.string());
}

KernelRows read_kernel_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("kernel cache: cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
        throw std::runtime_error("kernel cache: bad magic in " + path.string());
    }
    const auto version = get_le<std::uint32_t>(is);
    if (version != kCacheVersion) {
        throw std::runtime_error("kernel cache: unsupported version " + std::to_string(version));
    }
    KernelRows out;
    const auto regime = get_le<std::uint32_t>(is);
    if (regime > 1) throw std::runtime_error("kernel cache: unknown regime tag");
    out.finite = regime == 0;
    out.boundary = static_cast<std::int64_t>(get_le<std::uint64_t>(is));
    out.max_perimeter = static_cast<std::int64_t>(get_le<std::uint64_t>(is));
    if (out.max_perimeter < 1 || out.max_perimeter > (std::int64_t{1} << 24)) {
        throw std::runtime_error("kernel cache: implausible max perimeter");
    }
    out.rows.resize(static_cast<std::size_t>(out.max_perimeter));
    for (std::int64_t k = 1; k <= out.max_perimeter; ++k) {
        auto& r = out.rows[static_cast<std::size_t>(k - 1)];
        r.resize(static_cast<std::size_t>(k + 2));
        for (auto& p : r) p = std::bit_cast<double>(get_le<std::uint64_t>(is));
    }
    return out;
}

}  // namespace annulab
