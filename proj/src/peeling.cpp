#include "annulab/peeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "annulab/parallel.hpp"

namespace annulab {

std::string_view to_string(InitMode mode) {
    return mode == InitMode::kLoop ? "loop" : "simple-edge";
}

std::string_view to_string(LayerRule rule) {
    return rule == LayerRule::kEdgeCounters ? "edge-counters" : "side-split";
}

std::string_view to_string(PeelEvent event) {
    switch (event) {
        case PeelEvent::kStart: return "start";
        case PeelEvent::kNewVertex: return "new-vertex";
        case PeelEvent::kSwallowLeft: return "swallow-left";
        case PeelEvent::kSwallowRight: return "swallow-right";
        case PeelEvent::kCemetery: return "cemetery";
    }
    return "?";
}

std::string_view to_string(RunOutcome outcome) {
    switch (outcome) {
        case RunOutcome::kDied: return "died";
        case RunOutcome::kHitTarget: return "hit-target";
        case RunOutcome::kBudgetExhausted: return "budget-exhausted";
    }
    return "?";
}

PeelState init_state(InitMode mode, LayerRule rule) {
    PeelState s;
    if (mode == InitMode::kLoop) {
        s.perimeter = 1;
        s.volume = 1;
        s.cur = 1;
        s.nxt = 0;
    } else {
        s.perimeter = 2;
        s.volume = 2;
        // origin at distance 0, the other endpoint at distance 1
        s.cur = rule == LayerRule::kSideSplit ? 1 : 2;
        s.nxt = rule == LayerRule::kSideSplit ? 1 : 0;
    }
    return s;
}

namespace {

// Takes up to n from first, the rest from second.
void drain(std::int64_t n, std::int64_t& first, std::int64_t& second) {
    const std::int64_t a = std::min(n, first);
    first -= a;
    second -= n - a;
}

}  // namespace

bool apply_move(PeelState& s, const PeelMove& move, LayerRule rule) {
    if (!s.alive) throw std::logic_error("apply_move: state is dead");
    ++s.step;
    if (move.event == PeelEvent::kCemetery) {
        s.alive = false;
        return false;
    }
    if (move.event == PeelEvent::kStart) throw std::invalid_argument("apply_move: start is not a move");

    if (move.event == PeelEvent::kNewVertex) {
        s.perimeter += 1;
        s.volume += 1;
        if (rule == LayerRule::kSideSplit) {
            s.nxt += 1;
        } else {
            s.cur -= 1;
            s.nxt += 2;
        }
    } else {
        const std::int64_t m = move.swallowed;
        if (m < 0 || m > s.perimeter - 1) throw std::invalid_argument("apply_move: swallow size out of range");
        s.perimeter -= m;
        s.volume += move.inner_volume;
        if (rule == LayerRule::kSideSplit) {
            if (move.event == PeelEvent::kSwallowLeft) drain(m, s.cur, s.nxt);
            else drain(m, s.nxt, s.cur);
        } else {
            drain(m + 1, s.cur, s.nxt);
            s.cur += 1;
        }
    }

    if (s.cur == 0) {
        s.height += 1;
        s.cur = s.nxt;
        s.nxt = 0;
        return true;
    }
    return false;
}

PeelMove draw_move(const PeelState& s, const KernelTable& kernel, const VolumeSampler& volumes, Rng& rng) {
    const StepOutcome out = kernel.sample(s.perimeter, rng);
    PeelMove move;
    if (out.cemetery) {
        move.event = PeelEvent::kCemetery;
    } else if (out.m < 0) {
        move.event = PeelEvent::kNewVertex;
    } else {
        move.event = (rng() >> 63) ? PeelEvent::kSwallowRight : PeelEvent::kSwallowLeft;
        move.swallowed = out.m;
        move.inner_volume = volumes.sample_swallowed(out.m, rng);
    }
    return move;
}

PeelState step(PeelState state, const KernelTable& kernel, const VolumeSampler& volumes, Rng& rng,
               LayerRule rule) {
    apply_move(state, draw_move(state, kernel, volumes, rng), rule);
    return state;
}

std::int64_t default_stride(std::int64_t scale) {
    const double steps = std::pow(static_cast<double>(std::max<std::int64_t>(scale, 1)), 1.5);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(steps / 2048.0));
}

PeelTrace run_until(const PeelState& init, const KernelTable& kernel, const VolumeSampler& volumes,
                    const RunOptions& opt, Rng& rng) {
    if (opt.targets.empty() && opt.max_steps <= 0) {
        throw std::invalid_argument("run_until: need a target perimeter or a finite step budget");
    }
    if (!init.alive) throw std::invalid_argument("run_until: initial state is dead");
    if (opt.scale < 1) throw std::invalid_argument("run_until: scale must be positive");

    PeelTrace tr;
    tr.init = opt.init;
    tr.seed = opt.seed;
    tr.scale = opt.scale;
    tr.stride = opt.stride > 0 ? opt.stride : default_stride(opt.scale);

    PeelState s = init;
    double inv_sum = 0.0;
    tr.running_max = s.perimeter;
    auto keep = [&](PeelEvent ev) {
        if (opt.record_path) tr.samples.push_back({s.step, s.perimeter, s.volume, s.height, inv_sum, ev});
    };
    keep(PeelEvent::kStart);

    std::size_t pending = opt.targets.size();
    PeelEvent last = PeelEvent::kStart;
    for (;;) {
        if (opt.max_steps > 0 && s.step >= opt.max_steps) {
            tr.outcome = RunOutcome::kBudgetExhausted;
            break;
        }
        const PeelMove move = draw_move(s, kernel, volumes, rng);
        inv_sum += 1.0 / static_cast<double>(s.perimeter);
        const bool layer = apply_move(s, move, opt.rule);
        last = move.event;

        if (!s.alive) {
            tr.death_step = s.step;
            tr.outcome = RunOutcome::kDied;
            break;
        }
        tr.running_max = std::max(tr.running_max, s.perimeter);
        if (layer) tr.layers.push_back({s.height, s.step, s.perimeter, s.volume});
        if (opt.record_path && s.step % tr.stride == 0) keep(move.event);

        if (pending > 0) {
            for (const std::int64_t target : opt.targets) {
                if (s.perimeter == target && tr.first_hits.find(target) == tr.first_hits.end()) {
                    tr.first_hits.emplace(target, HitRecord{s.step, s.height, s.volume});
                    --pending;
                }
            }
            if (pending == 0 && opt.stop_on_target) {
                tr.outcome = RunOutcome::kHitTarget;
                break;
            }
        }
    }
    if (opt.record_path && (tr.samples.empty() || tr.samples.back().step != s.step)) keep(last);
    tr.final_state = s;
    tr.inv_perimeter_sum = inv_sum;
    return tr;
}

namespace {

double height_factor(std::int64_t L) { return std::sqrt(1.5 / static_cast<double>(L)); }

}  // namespace

RescaledPath rescale(const PeelTrace& tr) {
    const double L = static_cast<double>(tr.scale);
    const double time_unit = std::pow(L, 1.5);
    const double c = height_factor(tr.scale);
    RescaledPath out;
    out.samples.reserve(tr.samples.size());
    for (const TraceSample& x : tr.samples) {
        out.samples.push_back({static_cast<double>(x.step) / time_unit, static_cast<double>(x.perimeter) / L,
                               0.75 * static_cast<double>(x.volume) / (L * L),
                               c * static_cast<double>(x.height)});
    }
    if (tr.death_step) out.death_time = static_cast<double>(*tr.death_step - 1) / time_unit;
    for (const auto& [target, hit] : tr.first_hits) out.hit_radius[target] = c * static_cast<double>(hit.height);
    return out;
}

double height_integral_residual(const PeelTrace& tr) {
    const double c = height_factor(tr.scale);
    const double k = std::pow(2.0, -1.5) / std::sqrt(static_cast<double>(tr.scale));
    double worst = 0.0;
    for (const TraceSample& x : tr.samples) {
        worst = std::max(worst, std::abs(c * static_cast<double>(x.height) - k * x.inv_perimeter_sum));
    }
    return worst;
}

HitEstimate estimate_hit_prob(double a, double b, std::int64_t L, std::int64_t n, std::uint64_t seed,
                              unsigned workers, std::int64_t max_steps) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("estimate_hit_prob: a and b must be positive");
    if (n < 1) throw std::invalid_argument("estimate_hit_prob: N must be positive");
    HitEstimate est;
    est.boundary = static_cast<std::int64_t>(std::floor(a * static_cast<double>(L)));
    est.target = static_cast<std::int64_t>(std::floor(b * static_cast<double>(L)));
    if (est.boundary < 1 || est.target < 1) {
        throw std::invalid_argument("estimate_hit_prob: floor(aL) and floor(bL) must be at least 1");
    }
    if (max_steps <= 0) {
        max_steps = std::max<std::int64_t>(
            1'000'000, static_cast<std::int64_t>(200.0 * std::pow(static_cast<double>(L), 1.5)));
    }

    // the perimeter climbs by +1 only, so it never passes the target before hitting it
    const std::int64_t cap = std::max<std::int64_t>(est.target, 2) + 1;
    const KernelTable kernel = KernelTable::boltzmann_disk(est.boundary, cap);
    const VolumeSampler volumes(cap);

    RunOptions opt;
    opt.targets = {est.target};
    opt.max_steps = max_steps;
    opt.scale = L;
    opt.record_path = false;
    opt.seed = seed;

    const auto outcomes = map_replicates(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        Rng rng = make_stream(seed, i);
        return run_until(init_state(opt.init), kernel, volumes, opt, rng).outcome;
    });
    for (const RunOutcome o : outcomes) {
        if (o == RunOutcome::kHitTarget) ++est.n_hit;
        else if (o == RunOutcome::kDied) ++est.n_death;
        else ++est.n_budget;
    }

    const std::int64_t resolved = est.n_hit + est.n_death;
    SummaryReport& r = est.report;
    r.id = "peel-hit";
    r.config = {{"a", a}, {"b", b}, {"L", L}, {"N", n}, {"seed", seed}, {"max_steps", max_steps},
                {"init", std::string(to_string(opt.init))}};
    r.n = resolved;
    r.reference = a / (a + b);
    r.estimate = resolved > 0 ? static_cast<double>(est.n_hit) / static_cast<double>(resolved) : 0.0;
    const Interval ci = wilson_ci(est.n_hit, std::max<std::int64_t>(resolved, 1), r.ci_level);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    const double se = std::sqrt(r.reference * (1.0 - r.reference) / static_cast<double>(std::max<std::int64_t>(resolved, 1)));
    r.statistic_name = "abs_error_in_se";
    r.statistic = std::abs(r.estimate - r.reference) / se;
    r.threshold = 3.0;
    r.pass_below = true;
    r.extra = {{"n_hit", est.n_hit}, {"n_death", est.n_death}, {"n_budget", est.n_budget},
               {"boundary", est.boundary}, {"target", est.target}};
    r.decide();
    return est;
}

}  // namespace annulab
