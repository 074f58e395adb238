#pragma once

// Peeling transition kernels: q_inf for the infinite-volume (UIPT) perimeter chain
// and its Doob h-transform q_L for a Boltzmann disk with boundary length L, plus
// the law of the volume swallowed when the peeling closes off a region.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "annulab/rng.hpp"

namespace annulab {

/// Harmonic function h_L(j) = L / (L + j) of the UIPT perimeter chain.
inline double harmonic(std::int64_t L, std::int64_t j) {
    return static_cast<double>(L) / static_cast<double>(L + j);
}

// Direct evaluations in log scale. m is the perimeter decrease: the chain moves
// k -> k - m with m in [-1, k-1].
double q_inf(std::int64_t k, std::int64_t m);
double q_L(std::int64_t L, std::int64_t k, std::int64_t m);
double cemetery_prob(std::int64_t L, std::int64_t k);

/// q_L through its definition as a ratio of annulus partition functions,
/// 2 Z1(m+1) Z2(L, k-m) / Z2(L, k). Series based and slow; validation only.
double q_L_partition_ratio(std::int64_t L, std::int64_t k, std::int64_t m, double rel_tol = 1e-10);

struct StepOutcome {
    bool cemetery = false;
    std::int64_t m = 0;  // perimeter k -> k - m; meaningless when cemetery is set
};

/// Transition law of the perimeter chain for one regime.
///
/// q_inf(k, k-m) factors as w(m) * D(k-m) / D(k) with w(m) = 2 Z1(m+1) 12^{-m} and
/// D(j) = C1(j) 12^{-j}, and D(j) / D(j+1) = 2j / (2j+1). The table keeps w(m) for
/// m < max_perimeter; the D ratio is carried multiplicatively while a row is walked,
/// and w(m) past the table is evaluated from the closed form, so rows of any
/// perimeter are exact. Sampling walks the row by increasing m; the swallow sizes
/// have a m^{-5/2} tail, so the expected walk is O(1). Immutable after
/// construction; safe to share across threads.
class KernelTable {
public:
    static KernelTable uipt(std::int64_t max_perimeter);
    static KernelTable boltzmann_disk(std::int64_t boundary, std::int64_t max_perimeter);

    bool is_finite() const { return boundary_ > 0; }
    /// Outer boundary length L of the disk; 0 for the infinite regime.
    std::int64_t boundary() const { return boundary_; }
    /// Rows 1..max_perimeter are covered by the precomputed weights and by the cache file.
    std::int64_t max_perimeter() const { return max_perimeter_; }

    /// q(k, k - m). Throws std::out_of_range for k < 1 or m outside [-1, k-1].
    double prob(std::int64_t k, std::int64_t m) const;
    /// Mass sent to the cemetery from perimeter k (always 0 in the infinite regime).
    double cemetery(std::int64_t k) const;
    /// Row k as probabilities for m = -1, 0, ..., k-1.
    std::vector<double> row(std::int64_t k) const;

    StepOutcome sample(std::int64_t k, Rng& rng) const;

private:
    KernelTable(std::int64_t boundary, std::int64_t max_perimeter);
    double swallow_weight(std::int64_t m) const;
    // Visits (m, q(k, k-m)) for m = -1, 0, ... until fn returns true; returns the mass visited.
    template <class Fn>
    long double walk_row(std::int64_t k, Fn&& fn) const;

    std::int64_t boundary_ = 0;
    std::int64_t max_perimeter_ = 0;
    std::vector<double> swallow_weight_;  // index m + 1
};

/// On-disk cache of materialized kernel rows.
/// Layout, little-endian: magic "ANLBKRN1" (8 bytes), u32 version = 1,
/// u32 regime (0 finite, 1 infinite), u64 boundary, u64 max_perimeter, then for
/// k = 1..max_perimeter the k + 2 doubles q(k, k+1), q(k, k), ..., q(k, 1), q(k, cemetery).
struct KernelRows {
    bool finite = false;
    std::int64_t boundary = 0;
    std::int64_t max_perimeter = 0;
    std::vector<std::vector<double>> rows;  // rows[k-1], k + 2 entries
};

KernelRows materialize_rows(const KernelTable& table);
void write_kernel_cache(const std::filesystem::path& path, const KernelTable& table);
KernelRows read_kernel_cache(const std::filesystem::path& path);

/// Inner-vertex count of a Boltzmann triangulation of the disk with boundary
/// length n: P(K = k) = 12sqrt3^{-k} Card T1(n, k) / Z1(n).
///
/// Per boundary length, exact masses are tabulated for small k; past that, mass is
/// grouped into geometric bins whose totals come from Gauss-Legendre integration
/// of the gamma-function extension of the pmf, and an integer inside the chosen bin
/// is drawn by rejection against the exact pmf. Beyond the last bin a k^{-5/2}
/// power tail is inverted in closed form. Tables are built on first use and are
/// safe to share across threads. `max_boundary` only bounds the accepted arguments.
class VolumeSampler {
public:
    explicit VolumeSampler(std::int64_t max_boundary);
    ~VolumeSampler();
    VolumeSampler(VolumeSampler&&) noexcept;
    VolumeSampler& operator=(VolumeSampler&&) noexcept;

    std::int64_t max_boundary() const { return max_boundary_; }

    /// Volume swallowed by a peeling step of size m, i.e. boundary length m + 1.
    std::int64_t sample_swallowed(std::int64_t m, Rng& rng) const { return sample(m + 1, rng); }
    std::int64_t sample(std::int64_t boundary, Rng& rng) const;

    /// Exact pmf at integer k; log_pmf accepts real k through the gamma extension.
    double pmf(std::int64_t boundary, std::int64_t k) const;
    static double log_pmf(std::int64_t boundary, double k);

    /// Total mass assembled by the table (exact cells + bins + tail); 1 up to quadrature error.
    double table_mass(std::int64_t boundary) const;
    /// Start of the power-law tail region for this boundary length.
    double tail_start(std::int64_t boundary) const;

    struct Table;

private:
    const Table& table(std::int64_t boundary) const;
    static std::unique_ptr<Table> build_table(std::int64_t boundary);

    static constexpr std::int64_t kDirectSlots = 4096;

    std::int64_t max_boundary_ = 0;
    // boundaries below kDirectSlots: one slot each; larger ones go to a locked map
    mutable std::vector<std::unique_ptr<Table>> tables_;
    std::unique_ptr<std::once_flag[]> once_;
    mutable std::unique_ptr<std::mutex> large_mu_;
    mutable std::unordered_map<std::int64_t, std::unique_ptr<Table>> large_;
};

}  // namespace annulab
