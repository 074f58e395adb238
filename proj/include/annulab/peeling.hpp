#pragma once

// Peeling by layers of a Boltzmann triangulation with a boundary, run as a Markov
// chain on (perimeter, volume, height).

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "annulab/kernels.hpp"
#include "annulab/rng.hpp"
#include "annulab/stats.hpp"

namespace annulab {

enum class InitMode { kSimpleEdge, kLoop };

std::string_view to_string(InitMode mode);

/// Live exploration state.
///
/// The explored boundary is a cycle of `perimeter` vertices. Peeling by layers keeps
/// every boundary vertex at distance h or h + 1 from the origin; `cur` counts the
/// boundary vertices at distance h (a contiguous arc, always nonempty while alive)
/// and `nxt` those at distance h + 1.
struct PeelState {
    std::int64_t step = 0;
    std::int64_t perimeter = 0;
    std::int64_t volume = 0;
    std::int64_t height = 0;
    std::int64_t cur = 0;
    std::int64_t nxt = 0;
    bool alive = true;

    bool operator==(const PeelState&) const = default;
};

/// How (cur, nxt) evolve.
/// kSideSplit (default): counters hold boundary vertices. A new vertex joins the
/// distance-(h+1) arc; a swallow of m vertices eats into the distance-h arc on the
/// left side or the distance-(h+1) arc on the right side, each with probability 1/2.
/// kEdgeCounters: counters hold boundary edges. A new vertex moves one edge from cur
/// and adds two to nxt; a swallow removes the peeled edge and m more from cur first,
/// then returns one edge to cur. Kept for comparison only: its height grows four
/// times faster than the layer distance of the continuum limit.
enum class LayerRule { kSideSplit, kEdgeCounters };

std::string_view to_string(LayerRule rule);

/// Starting state. The simple-edge start has the origin (distance 0) and the other
/// endpoint (distance 1) on its boundary; the loop start has only the origin.
PeelState init_state(InitMode mode, LayerRule rule = LayerRule::kSideSplit);

enum class PeelEvent { kStart, kNewVertex, kSwallowLeft, kSwallowRight, kCemetery };

std::string_view to_string(PeelEvent event);

/// One resolved peeling step.
/// kNewVertex: the face reveals a new vertex (perimeter + 1).
/// kSwallowLeft / kSwallowRight: the face closes off `swallowed` boundary vertices on
/// the side of the distance-h arc / the distance-(h+1) arc, enclosing `inner_volume`
/// new vertices.
struct PeelMove {
    PeelEvent event = PeelEvent::kNewVertex;
    std::int64_t swallowed = 0;
    std::int64_t inner_volume = 0;
};

/// Applies a move to the state (pure bookkeeping). Returns true when the step
/// completed a layer.
bool apply_move(PeelState& state, const PeelMove& move, LayerRule rule = LayerRule::kSideSplit);

/// Draws the next move from the kernel row at the current perimeter.
PeelMove draw_move(const PeelState& state, const KernelTable& kernel, const VolumeSampler& volumes,
                   Rng& rng);

PeelState step(PeelState state, const KernelTable& kernel, const VolumeSampler& volumes, Rng& rng,
               LayerRule rule = LayerRule::kSideSplit);

struct TraceSample {
    std::int64_t step = 0;
    std::int64_t perimeter = 0;
    std::int64_t volume = 0;
    std::int64_t height = 0;
    /// sum_{j < step} 1 / perimeter_j
    double inv_perimeter_sum = 0.0;
    PeelEvent event = PeelEvent::kStart;
};

struct LayerRecord {
    std::int64_t layer = 0;  // height reached
    std::int64_t step = 0;   // sigma_layer
    std::int64_t perimeter = 0;
    std::int64_t volume = 0;
};

struct HitRecord {
    std::int64_t step = 0;
    std::int64_t height = 0;
    std::int64_t volume = 0;
};

enum class RunOutcome { kDied, kHitTarget, kBudgetExhausted };

std::string_view to_string(RunOutcome outcome);

struct RunOptions {
    std::vector<std::int64_t> targets;
    bool stop_on_target = true;
    std::int64_t max_steps = 0;
    /// Scaling parameter L used by rescale(); usually the disk boundary length.
    std::int64_t scale = 1;
    /// Keep every stride-th state; 0 means max(1, floor(L^{3/2} / 2048)).
    std::int64_t stride = 0;
    bool record_path = true;
    InitMode init = InitMode::kSimpleEdge;
    LayerRule rule = LayerRule::kSideSplit;
    std::uint64_t seed = 0;
};

struct PeelTrace {
    InitMode init = InitMode::kSimpleEdge;
    std::uint64_t seed = 0;
    std::int64_t scale = 1;
    std::int64_t stride = 1;
    RunOutcome outcome = RunOutcome::kDied;
    std::vector<TraceSample> samples;
    std::vector<LayerRecord> layers;
    /// Step index S at which the cemetery was drawn.
    std::optional<std::int64_t> death_step;
    std::map<std::int64_t, HitRecord> first_hits;
    std::int64_t running_max = 0;
    PeelState final_state;
    double inv_perimeter_sum = 0.0;
};

std::int64_t default_stride(std::int64_t scale);

PeelTrace run_until(const PeelState& init, const KernelTable& kernel, const VolumeSampler& volumes,
                    const RunOptions& options, Rng& rng);

struct RescaledSample {
    double t = 0.0;
    double p_hat = 0.0;
    double v_hat = 0.0;
    double h_hat = 0.0;
};

struct RescaledPath {
    std::vector<RescaledSample> samples;
    /// L^{-3/2} (S - 1) when the chain died.
    std::optional<double> death_time;
    /// sqrt(3/2) L^{-1/2} h at the first hit of each target perimeter.
    std::map<std::int64_t, double> hit_radius;
};

/// Time t = step / L^{3/2}, perimeter / L, (3/4) L^{-2} volume, sqrt(3/2) L^{-1/2} height.
RescaledPath rescale(const PeelTrace& trace);

/// sup over recorded samples of | h_hat(t) - 2^{-3/2} int_0^t du / p_hat(u) |.
double height_integral_residual(const PeelTrace& trace);

struct HitEstimate {
    std::int64_t n_hit = 0;
    std::int64_t n_death = 0;
    std::int64_t n_budget = 0;
    std::int64_t boundary = 0;
    std::int64_t target = 0;
    SummaryReport report;
};

/// Runs N explorations of a disk with boundary floor(aL) towards the target
/// perimeter floor(bL) and compares the hit frequency with a/(a+b).
HitEstimate estimate_hit_prob(double a, double b, std::int64_t L, std::int64_t n, std::uint64_t seed,
                              unsigned workers = 0, std::int64_t max_steps = 0);

}  // namespace annulab
