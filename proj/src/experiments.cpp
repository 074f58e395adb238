#include "annulab/experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "annulab/combin.hpp"
#include "annulab/csbp.hpp"
#include "annulab/kernels.hpp"
#include "annulab/laws.hpp"
#include "annulab/parallel.hpp"
#include "annulab/peeling.hpp"

namespace annulab {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{"experiment", "a",       "b",    "L",  "N",    "dt",   "max_steps",
                                            "horizon",    "seed",    "out",  "stride", "workers", "x", "r",
                                            "u",          "bins",    "init", "export_traces"};
    return keys;
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw ConfigError("field '" + field + "': " + why);
}

double get_real(const json& j, const std::string& k) {
    if (!j.at(k).is_number()) bad(k, "expected a number");
    return j.at(k).get<double>();
}

std::int64_t get_int(const json& j, const std::string& k) {
    const json& v = j.at(k);
    if (v.is_number_integer() || v.is_number_unsigned()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    bad(k, "expected an integer");
}

template <class T>
std::vector<T> get_list(const json& j, const std::string& k) {
    const json& v = j.at(k);
    std::vector<T> out;
    if (!v.is_array()) bad(k, "expected a list");
    for (const json& e : v) {
        if (!e.is_number()) bad(k, "expected a list of numbers");
        if constexpr (std::is_integral_v<T>) {
            const double d = e.get<double>();
            if (std::floor(d) != d) bad(k, "expected a list of integers");
            out.push_back(static_cast<T>(d));
        } else {
            out.push_back(e.get<T>());
        }
    }
    return out;
}

std::string fmt(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), os_(path) {
        if (!os_) throw std::runtime_error("cannot write " + path.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
    }
    ~CsvWriter() = default;
    const std::filesystem::path& path() const { return path_; }
    void close() {
        os_.close();
        if (!os_) throw std::runtime_error("write failed for " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream os_;
};

struct Ctx {
    const ExperimentConfig& cfg;
    std::ostream* log;
    ExperimentResult& result;

    std::filesystem::path file(const std::string& name) const { return cfg.out_dir / name; }
    void note(const std::string& msg) const {
        if (log) *log << "[" << cfg.experiment << "] " << msg << std::endl;
    }
    void add(SummaryReport r) {
        r.decide();
        result.reports.push_back(std::move(r));
    }
    void done(CsvWriter& w) {
        w.close();
        result.artifacts.push_back(w.path());
    }
};

SummaryReport base_report(const std::string& id, const ExperimentConfig& cfg) {
    SummaryReport r;
    r.id = id;
    r.config = cfg.to_json();
    return r;
}

// ---------------------------------------------------------------- verify-exact

void run_verify_exact(Ctx& ctx) {
    struct Check {
        std::string name;
        double value;
        double tolerance;
    };
    std::vector<Check> checks;

    {
        double worst = 0.0;
        for (std::int64_t L = 2; L <= 30; ++L) {
            worst = std::max(worst, std::abs(z1_series(L, 1e-6) / z1(L) - 1.0));
        }
        checks.push_back({"z1-series-vs-closed-form", worst, 1e-6});
    }
    {
        double worst = 0.0;
        for (std::int64_t k = 1; k <= 500; ++k) {
            long double s = 0.0L;
            for (std::int64_t m = -1; m <= k - 1; ++m) s += q_inf(k, m);
            worst = std::max(worst, static_cast<double>(std::abs(s - 1.0L)));
        }
        checks.push_back({"q-inf-row-sums", worst, 1e-9});
    }
    {
        double worst = 0.0;
        for (std::int64_t L : {1, 10, 100}) {
            const KernelTable table = KernelTable::boltzmann_disk(L, 200);
            for (std::int64_t k = 1; k <= 200; ++k) {
                long double s = table.cemetery(k);
                for (std::int64_t m = -1; m <= k - 1; ++m) s += q_inf(k, m) * harmonic(L, k - m) / harmonic(L, k);
                worst = std::max(worst, static_cast<double>(std::abs(s - 1.0L)));
            }
        }
        checks.push_back({"h-transform-harmonicity", worst, 1e-9});
    }
    {
        double worst = 0.0;
        for (std::int64_t L : {1, 2, 5}) {
            for (std::int64_t k = 1; k <= 4; ++k) {
                for (std::int64_t m = -1; m <= k - 1; ++m) {
                    worst = std::max(worst, std::abs(q_L(L, k, m) - q_L_partition_ratio(L, k, m, 1e-8)));
                }
            }
        }
        checks.push_back({"q-L-two-definitions", worst, 1e-4});
    }
    {
        const std::int64_t L = 10000;
        const double scaled = std::pow(static_cast<double>(L), 1.5) * cemetery_prob(L, L);
        const double ref = cemetery_asymptote(1.0);
        checks.push_back({"cemetery-asymptotics-L1e4", std::abs(scaled / ref - 1.0), 0.05});
    }
    checks.push_back({"hit-prob-integral(1,1)", hit_prob_integral_check(1.0, 1.0), 1e-8});
    checks.push_back({"hit-prob-integral(2,5)", hit_prob_integral_check(2.0, 5.0), 1e-8});
    checks.push_back({"convolution-identity(1,1)", convolution_identity_check(1.0, 1.0), 1e-8});
    checks.push_back({"convolution-identity(4,1)", convolution_identity_check(4.0, 1.0), 1e-8});
    checks.push_back({"normalization-identity", normalization_identity_check(), 1e-8});
    for (double lambda : {0.5, 1.0, 2.0}) {
        checks.push_back({"scale-w-laplace(" + fmt(lambda) + ")", scale_w_laplace_residual(lambda), 1e-8});
        checks.push_back({"scale-wtilde-laplace(" + fmt(lambda) + ")", scale_wtilde_laplace_residual(lambda), 1e-8});
    }

    CsvWriter csv(ctx.file("verify-exact.csv"), {"check", "value", "tolerance", "verdict"});
    for (const Check& c : checks) {
        SummaryReport r = base_report("verify-exact/" + c.name, ctx.cfg);
        r.n = 1;
        r.estimate = r.ci_low = r.ci_high = c.value;
        r.reference = 0.0;
        r.statistic_name = "residual";
        r.statistic = c.value;
        r.threshold = c.tolerance;
        r.decide();
        csv.row({c.name, fmt(c.value), fmt(c.tolerance), r.verdict ? "pass" : "fail"});
        ctx.add(std::move(r));
    }
    ctx.done(csv);
}

// ---------------------------------------------------------------- peeling

InitMode init_mode(const std::string& s) { return s == "loop" ? InitMode::kLoop : InitMode::kSimpleEdge; }

void run_peel_hit(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    CsvWriter csv(ctx.file("peel-hit.csv"), {"L", "boundary", "target", "N", "n_hit", "n_death", "n_budget", "estimate",
                                              "ci_low", "ci_high", "reference", "discrete_reference"});
    std::vector<double> errors, widths;
    const std::int64_t p0 = init_state(init_mode(cfg.init)).perimeter;
    for (std::size_t i = 0; i < cfg.L_list.size(); ++i) {
        const std::int64_t L = cfg.L_list[i];
        ctx.note("L = " + std::to_string(L));
        HitEstimate est = estimate_hit_prob(cfg.a, cfg.b, L, cfg.N, cfg.seed + static_cast<std::uint64_t>(i),
                                            cfg.workers, cfg.max_steps);
        SummaryReport r = est.report;
        r.id = "peel-hit/L=" + std::to_string(L);
        r.config = cfg.to_json();
        // exact for the discrete chain: h_L(target) / h_L(p0)
        const double discrete = static_cast<double>(est.boundary + p0) / static_cast<double>(est.boundary + est.target);
        const double se = std::sqrt(discrete * (1.0 - discrete) / static_cast<double>(std::max<std::int64_t>(r.n, 1)));
        r.statistic_name = "abs_error_vs_discrete_in_se";
        r.statistic = std::abs(r.estimate - discrete) / se;
        r.threshold = 3.0;
        r.extra["discrete_reference"] = discrete;
        r.extra["abs_error_vs_limit"] = std::abs(r.estimate - r.reference);
        errors.push_back(std::abs(r.estimate - r.reference));
        widths.push_back(r.ci_high - r.ci_low);
        csv.row({std::to_string(L), std::to_string(est.boundary), std::to_string(est.target), std::to_string(cfg.N),
                 std::to_string(est.n_hit), std::to_string(est.n_death), std::to_string(est.n_budget), fmt(r.estimate),
                 fmt(r.ci_low), fmt(r.ci_high), fmt(r.reference), fmt(discrete)});
        ctx.add(r);

        if (i + 1 == cfg.L_list.size()) {
            SummaryReport lim = r;
            lim.id = "peel-hit/limit";
            const double se_lim =
                std::sqrt(r.reference * (1.0 - r.reference) / static_cast<double>(std::max<std::int64_t>(r.n, 1)));
            lim.statistic_name = "abs_error_vs_limit_in_se";
            lim.statistic = std::abs(r.estimate - r.reference) / se_lim;
            lim.threshold = 3.0;
            ctx.add(lim);
        }
    }
    if (cfg.L_list.size() >= 2) {
        SummaryReport t = base_report("peel-hit/trend", cfg);
        t.n = cfg.N;
        t.estimate = errors.back();
        t.ci_low = t.ci_high = t.estimate;
        t.reference = 0.0;
        // each error may exceed its predecessor by at most two CI widths
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < errors.size(); ++i) {
            worst = std::max(worst, errors[i] - errors[i - 1] - 2.0 * std::max(widths[i], widths[i - 1]));
        }
        t.statistic_name = "max_error_increase_beyond_2ci";
        t.statistic = worst;
        t.threshold = 0.0;
        t.extra["abs_errors"] = errors;
        t.extra["ci_widths"] = widths;
        ctx.add(t);
    }
    ctx.done(csv);
}

void run_peel_height(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> medians;
    CsvWriter res_csv(ctx.file("peel-height.csv"),
                      {"L", "replicate", "residual", "outcome", "steps", "height", "t_end"});
    json per_l = json::array();
    for (std::size_t li = 0; li < cfg.L_list.size(); ++li) {
        const std::int64_t L = cfg.L_list[li];
        const auto boundary = static_cast<std::int64_t>(std::floor(cfg.a * static_cast<double>(L)));
        ctx.note("L = " + std::to_string(L));
        const KernelTable kernel = KernelTable::boltzmann_disk(boundary, 64 * boundary + 64);
        const VolumeSampler volumes(std::numeric_limits<std::int64_t>::max());
        RunOptions opt;
        opt.scale = L;
        opt.stride = cfg.stride;
        opt.init = init_mode(cfg.init);
        opt.max_steps = cfg.max_steps > 0
                            ? cfg.max_steps
                            : static_cast<std::int64_t>(std::ceil(10.0 * std::pow(static_cast<double>(L), 1.5)));
        opt.seed = cfg.seed;

        struct Out {
            double residual = 0.0;
            RunOutcome outcome = RunOutcome::kDied;
            std::int64_t steps = 0;
            std::int64_t height = 0;
            std::optional<PeelTrace> trace;
        };
        const std::uint64_t seed = cfg.seed + 1000003ULL * li;
        auto outs = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
            Rng rng = make_stream(seed, i);
            PeelTrace tr = run_until(init_state(opt.init), kernel, volumes, opt, rng);
            Out o;
            o.residual = height_integral_residual(tr);
            o.outcome = tr.outcome;
            o.steps = tr.final_state.step;
            o.height = tr.final_state.height;
            if (static_cast<std::int64_t>(i) < cfg.export_traces) o.trace = std::move(tr);
            return o;
        });

        std::vector<double> residuals;
        std::int64_t budget = 0;
        const double time_unit = std::pow(static_cast<double>(L), 1.5);
        for (std::size_t i = 0; i < outs.size(); ++i) {
            residuals.push_back(outs[i].residual);
            if (outs[i].outcome == RunOutcome::kBudgetExhausted) ++budget;
            res_csv.row({std::to_string(L), std::to_string(i), fmt(outs[i].residual),
                         std::string(to_string(outs[i].outcome)), std::to_string(outs[i].steps),
                         std::to_string(outs[i].height), fmt(static_cast<double>(outs[i].steps) / time_unit)});
        }
        if (cfg.export_traces > 0) {
            CsvWriter tcsv(ctx.file("peel-height_traces_L" + std::to_string(L) + ".csv"),
                           {"replicate", "step", "t_rescaled", "p", "p_hat", "v", "v_hat", "h", "h_hat", "event"});
            for (std::size_t i = 0; i < outs.size(); ++i) {
                if (!outs[i].trace) continue;
                const PeelTrace& tr = *outs[i].trace;
                const RescaledPath rp = rescale(tr);
                for (std::size_t j = 0; j < tr.samples.size(); ++j) {
                    const TraceSample& s = tr.samples[j];
                    const RescaledSample& q = rp.samples[j];
                    tcsv.row({std::to_string(i), std::to_string(s.step), fmt(q.t), std::to_string(s.perimeter),
                              fmt(q.p_hat), std::to_string(s.volume), fmt(q.v_hat), std::to_string(s.height),
                              fmt(q.h_hat), std::string(to_string(s.event))});
                }
            }
            ctx.done(tcsv);
        }
        const double med = median(residuals);
        medians.push_back(med);
        per_l.push_back({{"L", L}, {"median_residual", med}, {"n_budget", budget},
                         {"max_steps", opt.max_steps}});
        ctx.note("median residual " + fmt(med));
    }
    ctx.done(res_csv);

    SummaryReport r = base_report("peel-height", cfg);
    r.n = cfg.N;
    r.estimate = medians.empty() ? 0.0 : medians.back();
    r.ci_low = r.ci_high = r.estimate;
    r.reference = 0.0;
    r.statistic_name = "max_ratio_of_consecutive_medians";
    double worst = medians.size() >= 2 ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < medians.size(); ++i) worst = std::max(worst, medians[i] / medians[i - 1]);
    r.statistic = worst;
    // strictly decreasing medians
    r.threshold = std::nextafter(1.0, 0.0);
    r.extra["per_L"] = per_l;
    ctx.add(r);
}

// ---------------------------------------------------------------- csbp

CsbpOptions csbp_options(const ExperimentConfig& cfg) {
    CsbpOptions o;
    o.dt = cfg.dt;
    o.horizon = cfg.horizon;
    return o;
}

void run_csbp_extinction(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const CsbpOptions opt = csbp_options(cfg);
    CsvWriter csv(ctx.file("csbp-extinction.csv"), {"x", "replicate", "extinction_time"});
    for (std::size_t xi = 0; xi < cfg.x_list.size(); ++xi) {
        const double x = cfg.x_list[xi];
        ctx.note("x = " + fmt(x));
        const std::uint64_t seed = cfg.seed + 7919ULL * xi;
        auto times = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
            thread_local CsbpPath path;
            Rng rng = make_stream(seed, i);
            simulate_csbp(x, opt, rng, path);
            return path.extinction_time.value_or(std::numeric_limits<double>::infinity());
        });
        for (std::size_t i = 0; i < times.size(); ++i) csv.row({fmt(x), std::to_string(i), fmt(times[i])});
        std::vector<double> sorted = times;
        std::sort(sorted.begin(), sorted.end());
        const double d = ks_statistic(sorted, [x](double t) { return t > 0.0 ? extinction_cdf(x, t) : 0.0; });

        SummaryReport r = base_report("csbp-extinction/x=" + fmt(x), cfg);
        r.n = cfg.N;
        const auto by_one = std::count_if(times.begin(), times.end(), [](double t) { return t <= 1.0; });
        r.estimate = static_cast<double>(by_one) / static_cast<double>(cfg.N);
        const Interval ci = wilson_ci(by_one, cfg.N, r.ci_level);
        r.ci_low = ci.low;
        r.ci_high = ci.high;
        r.reference = extinction_cdf(x, 1.0);
        r.statistic_name = "ks_distance";
        r.statistic = d;
        r.threshold = ks_critical(cfg.N, 1e-3);
        r.extra["estimate_is"] = "P(T <= 1)";
        r.extra["censored"] = std::count_if(times.begin(), times.end(), [](double t) { return !std::isfinite(t); });
        ctx.add(r);
    }
    ctx.done(csv);
}

struct LengthSample {
    double z0 = 0.0;
    bool visited = false;
    double length = 0.0;
    double extinction = 0.0;
    bool censored = false;
};

void run_csbp_length(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const CsbpOptions opt = csbp_options(cfg);
    auto samples = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
        thread_local CsbpPath path;
        Rng rng = make_stream(cfg.seed, i);
        LengthSample s;
        s.z0 = sample_initial_perimeter(cfg.a, rng);
        simulate_csbp(s.z0, opt, rng, path);
        s.visited = visits_level(path, cfg.b);
        s.length = last_passage(path, cfg.b).value_or(0.0);
        s.extinction = path.extinction_time.value_or(std::numeric_limits<double>::infinity());
        s.censored = path.censored;
        return s;
    });

    CsvWriter csv(ctx.file("csbp-length.csv"), {"replicate", "z0", "visited", "last_passage", "extinction_time"});
    std::vector<double> lengths;
    std::int64_t visits = 0, censored = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const LengthSample& s = samples[i];
        csv.row({std::to_string(i), fmt(s.z0), s.visited ? "1" : "0", s.visited ? fmt(s.length) : "",
                 fmt(s.extinction)});
        if (s.censored) ++censored;
        if (s.visited) {
            ++visits;
            lengths.push_back(s.length);
        }
    }
    ctx.done(csv);

    SummaryReport v = base_report("csbp-length/visit", cfg);
    v.n = cfg.N;
    v.estimate = static_cast<double>(visits) / static_cast<double>(cfg.N);
    const Interval ci = wilson_ci(visits, cfg.N, v.ci_level);
    v.ci_low = ci.low;
    v.ci_high = ci.high;
    v.reference = hit_prob(cfg.a, cfg.b);
    v.statistic_name = "abs_error_in_se";
    v.statistic = std::abs(v.estimate - v.reference) /
                  std::sqrt(v.reference * (1.0 - v.reference) / static_cast<double>(cfg.N));
    v.threshold = 3.0;
    v.extra["censored"] = censored;
    ctx.add(v);

    SummaryReport m = base_report("csbp-length/mean", cfg);
    m.n = static_cast<std::int64_t>(lengths.size());
    m.reference = expected_length(cfg.a, cfg.b);
    if (!lengths.empty()) {
        const MeanEstimate me = mean_ci(lengths, m.ci_level);
        m.estimate = me.mean;
        m.ci_low = me.ci.low;
        m.ci_high = me.ci.high;
        m.extra["std_error"] = me.std_error;
        m.statistic = std::abs(me.mean / m.reference - 1.0);
    } else {
        m.statistic = std::numeric_limits<double>::infinity();
    }
    m.statistic_name = "relative_error";
    m.threshold = 0.02;
    ctx.add(m);

    // closed-form symmetry and sqrt(c) scaling on a fixed parameter grid
    double worst = 0.0;
    for (double a : {0.1, 0.5, 1.0, 2.0, 7.3}) {
        for (double b : {0.2, 1.0, 3.0, 11.0}) {
            const double e = expected_length(a, b);
            worst = std::max(worst, std::abs(expected_length(b, a) / e - 1.0));
            for (double c : {0.25, 4.0, 9.0}) {
                worst = std::max(worst, std::abs(expected_length(c * a, c * b) / (std::sqrt(c) * e) - 1.0));
            }
        }
    }
    SummaryReport cf = base_report("csbp-length/closed-form", cfg);
    cf.n = 60;
    cf.estimate = cf.ci_low = cf.ci_high = worst;
    cf.statistic_name = "max_relative_residual";
    cf.statistic = worst;
    cf.threshold = 1e-12;
    ctx.add(cf);
}

void run_perimeter_law(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const CsbpOptions opt = csbp_options(cfg);
    struct Out {
        double z0 = 0.0;
        double extinction = 0.0;
        std::optional<double> value;
    };
    auto outs = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
        thread_local CsbpPath path;
        Rng rng = make_stream(cfg.seed, i);
        Out o;
        o.z0 = sample_initial_perimeter(cfg.a, rng);
        simulate_csbp(o.z0, opt, rng, path);
        o.extinction = path.extinction_time.value_or(std::numeric_limits<double>::infinity());
        o.value = perimeter_at_radius(path, cfg.r);
        return o;
    });

    CsvWriter csv(ctx.file("perimeter-law.csv"), {"replicate", "z0", "extinction_time", "present", "value"});
    std::vector<double> values;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        csv.row({std::to_string(i), fmt(outs[i].z0), fmt(outs[i].extinction), outs[i].value ? "1" : "0",
                 outs[i].value ? fmt(*outs[i].value) : ""});
        if (outs[i].value) values.push_back(*outs[i].value);
    }
    ctx.done(csv);

    const double mass = perimeter_hull_mass(cfg.r, cfg.a);
    const auto present = static_cast<std::int64_t>(values.size());
    SummaryReport m = base_report("perimeter-law/mass", cfg);
    m.n = cfg.N;
    m.estimate = static_cast<double>(present) / static_cast<double>(cfg.N);
    const Interval ci = wilson_ci(present, cfg.N, m.ci_level);
    m.ci_low = ci.low;
    m.ci_high = ci.high;
    m.reference = mass;
    m.statistic_name = "abs_error_in_se";
    m.statistic = std::abs(m.estimate - mass) / std::sqrt(mass * (1.0 - mass) / static_cast<double>(cfg.N));
    m.threshold = 3.0;
    ctx.add(m);

    SummaryReport s = base_report("perimeter-law/shape", cfg);
    s.n = present;
    s.reference = mass;
    s.statistic_name = "chi_square";
    if (present > 0) {
        const double r = cfg.r, a = cfg.a;
        const ChiSquareResult chi = chisq_vs_density(
            values, [r, a](double y) { return perimeter_hull_density(r, a, y); }, 0.0,
            std::numeric_limits<double>::infinity(), cfg.bins, 1e-3);
        s.statistic = chi.statistic;
        s.threshold = chi.critical;
        s.extra["dof"] = chi.dof;
        s.extra["cells"] = chi.bins;
        const MeanEstimate me = mean_ci(values, s.ci_level);
        s.estimate = me.mean;
        s.ci_low = me.ci.low;
        s.ci_high = me.ci.high;
        s.extra["estimate_is"] = "mean perimeter given presence";
    } else {
        s.statistic = std::numeric_limits<double>::infinity();
    }
    ctx.add(s);
}

void run_occupation(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const CsbpOptions opt = csbp_options(cfg);
    const auto f = [](double y) { return y * std::exp(-y); };
    auto integrals = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
        thread_local CsbpPath path;
        Rng rng = make_stream(cfg.seed, i);
        simulate_csbp(sample_initial_perimeter(cfg.a, rng), opt, rng, path);
        return occupation_integral(path, f);
    });
    CsvWriter csv(ctx.file("occupation.csv"), {"replicate", "integral"});
    for (std::size_t i = 0; i < integrals.size(); ++i) csv.row({std::to_string(i), fmt(integrals[i])});
    ctx.done(csv);

    // Z under the a-law is a Z'_{t / sqrt a} with Z' under the 1-law
    const double a = cfg.a;
    const double reference = std::sqrt(a) * occupation_expectation([&](double y) { return f(a * y); });
    SummaryReport r = base_report("occupation", cfg);
    const MeanEstimate me = mean_ci(integrals, r.ci_level);
    r.n = cfg.N;
    r.estimate = me.mean;
    r.ci_low = me.ci.low;
    r.ci_high = me.ci.high;
    r.reference = reference;
    r.statistic_name = "relative_error";
    r.statistic = std::abs(me.mean / reference - 1.0);
    r.threshold = 0.02;
    r.extra["std_error"] = me.std_error;
    r.extra["f"] = "y exp(-y)";
    ctx.add(r);
}

void run_tail(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    CsbpOptions opt = csbp_options(cfg);
    const double t_stop = *std::max_element(cfg.u_list.begin(), cfg.u_list.end());
    // Past t_stop only whether b is ever visited again matters; from z < b that has
    // probability 1 - sqrt((b - z) / b), so the path is not followed further.
    opt.horizon = std::min(opt.horizon, t_stop);
    const double b = cfg.b;
    struct Out {
        bool visited = false;
        double length = 0.0;
    };
    auto outs = map_replicates(static_cast<std::size_t>(cfg.N), cfg.workers, [&](std::size_t i) {
        thread_local CsbpPath path;
        Rng rng = make_stream(cfg.seed, i);
        simulate_csbp(sample_initial_perimeter(cfg.a, rng), opt, rng, path);
        Out o;
        o.visited = visits_level(path, b);
        o.length = last_passage(path, b).value_or(0.0);
        if (path.censored) {
            const double z = path.values.back();
            if (z >= b || uniform01(rng) >= levy_never_hits(z, b)) {
                o.visited = true;
                o.length = std::numeric_limits<double>::infinity();  // beyond t_stop
            }
        }
        return o;
    });

    std::vector<double> lengths;
    for (const Out& o : outs) {
        if (o.visited) lengths.push_back(o.length);
    }
    const auto visits = static_cast<std::int64_t>(lengths.size());
    CsvWriter csv(ctx.file("tail.csv"),
                  {"u", "visits", "exceedances", "u2_survival", "ci_low", "ci_high", "reference"});
    for (double u : cfg.u_list) {
        const auto exceed = std::count_if(lengths.begin(), lengths.end(), [u](double x) { return x > u; });
        SummaryReport r = base_report("tail/u=" + fmt(u), cfg);
        r.n = visits;
        const double p = visits > 0 ? static_cast<double>(exceed) / static_cast<double>(visits) : 0.0;
        r.estimate = u * u * p;
        if (visits > 0) {
            const Interval ci = wilson_ci(exceed, visits, r.ci_level);
            r.ci_low = u * u * ci.low;
            r.ci_high = u * u * ci.high;
        }
        r.reference = 3.0 * (cfg.a + cfg.b);
        r.statistic_name = "relative_error";
        r.statistic = visits > 0 ? std::abs(r.estimate / r.reference - 1.0) : std::numeric_limits<double>::infinity();
        r.threshold = 0.3;
        r.extra["exceedances"] = exceed;
        csv.row({fmt(u), std::to_string(visits), std::to_string(exceed), fmt(r.estimate), fmt(r.ci_low),
                 fmt(r.ci_high), fmt(r.reference)});
        ctx.add(r);
    }
    if (visits > 0 && cfg.u_list.size() >= 2) {
        const TailFit fit = tail_coefficient(lengths, cfg.u_list);
        ctx.result.reports.back().extra["fit_coefficient"] = fit.coefficient;
        ctx.result.reports.back().extra["fit_slope"] = fit.slope;
        ctx.result.reports.back().extra["fit_reliable"] = fit.reliable;
    }
    ctx.done(csv);
}

}  // namespace

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("ANNULAB_OUT_DIR"); env && *env) return env;
    return "annulab_out";
}

json ExperimentConfig::to_json() const {
    // out and workers do not change results and are left out of the echo
    return json{{"experiment", experiment}, {"a", a},          {"b", b},         {"L", L_list},
                {"N", N},                   {"dt", dt},        {"max_steps", max_steps},
                {"horizon", horizon},       {"seed", seed},    {"stride", stride},
                {"x", x_list},              {"r", r},          {"u", u_list},    {"bins", bins},
                {"init", init},             {"export_traces", export_traces}};
}

json experiment_defaults(const std::string& e) {
    json d{{"a", 1.0},       {"b", 1.0},          {"L", json::array()}, {"N", 10000},  {"dt", 1e-3},
           {"max_steps", 0}, {"horizon", 1e4},    {"seed", 42},         {"stride", 0}, {"workers", 0},
           {"x", json::array()}, {"r", 1.0},      {"u", json::array()}, {"bins", 40},  {"init", "simple-edge"},
           {"export_traces", 4}};
    if (e == "verify-exact") d["N"] = 1;
    if (e == "peel-hit") d["L"] = {50, 100, 200, 400};
    if (e == "peel-height") {
        d["L"] = {100, 10000};
        d["N"] = 200;
    }
    if (e == "csbp-extinction") d["x"] = {0.5, 1.0, 2.0};
    if (e == "csbp-length" || e == "perimeter-law" || e == "occupation") d["N"] = 100000;
    if (e == "tail") {
        d["N"] = 1000000;
        d["u"] = {10.0, 20.0};
    }
    return d;
}

ExperimentConfig resolve_config(const json& explicit_values, const std::optional<std::filesystem::path>& file) {
    json from_file = json::object();
    if (file) {
        std::ifstream is(*file);
        if (!is) throw ConfigError("config file '" + file->string() + "' cannot be opened");
        try {
            from_file = json::parse(is);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + file->string() + "': " + e.what());
        }
        if (!from_file.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    for (const json* src : {static_cast<const json*>(&from_file), &explicit_values}) {
        for (auto it = src->begin(); it != src->end(); ++it) {
            if (!known_keys().count(it.key())) bad(it.key(), "unknown key");
        }
    }

    std::string experiment;
    if (explicit_values.contains("experiment")) experiment = explicit_values["experiment"].get<std::string>();
    else if (from_file.contains("experiment") && from_file["experiment"].is_string())
        experiment = from_file["experiment"].get<std::string>();
    if (experiment.empty()) bad("experiment", "missing; choose one of verify-exact, peel-hit, peel-height, "
                                              "csbp-extinction, csbp-length, perimeter-law, occupation, tail");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        bad("experiment", "unknown experiment '" + experiment + "'");
    }

    json merged = experiment_defaults(experiment);
    merged["experiment"] = experiment;
    merged["out"] = default_out_dir().string();
    for (const json* src : {static_cast<const json*>(&from_file), &explicit_values}) {
        for (auto it = src->begin(); it != src->end(); ++it) merged[it.key()] = it.value();
    }

    ExperimentConfig c;
    c.experiment = experiment;
    c.a = get_real(merged, "a");
    c.b = get_real(merged, "b");
    c.L_list = get_list<std::int64_t>(merged, "L");
    c.N = get_int(merged, "N");
    c.dt = get_real(merged, "dt");
    c.max_steps = get_int(merged, "max_steps");
    c.horizon = get_real(merged, "horizon");
    {
        const json& s = merged.at("seed");
        if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
        else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) c.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
        else bad("seed", "expected a nonnegative 64-bit integer");
    }
    if (!merged.at("out").is_string()) bad("out", "expected a path");
    c.out_dir = merged.at("out").get<std::string>();
    c.stride = get_int(merged, "stride");
    {
        const std::int64_t w = get_int(merged, "workers");
        if (w < 0 || w > 4096) bad("workers", "must be in [0, 4096]");
        c.workers = static_cast<unsigned>(w);
    }
    c.x_list = get_list<double>(merged, "x");
    c.r = get_real(merged, "r");
    c.u_list = get_list<double>(merged, "u");
    c.bins = static_cast<int>(get_int(merged, "bins"));
    if (!merged.at("init").is_string()) bad("init", "expected simple-edge or loop");
    c.init = merged.at("init").get<std::string>();
    c.export_traces = get_int(merged, "export_traces");

    if (!(c.a > 0.0)) bad("a", "must be positive");
    if (!(c.b > 0.0)) bad("b", "must be positive");
    if (c.N < 1) bad("N", "must be positive");
    if (!(c.dt > 0.0)) bad("dt", "must be positive");
    if (!(c.horizon > 0.0)) bad("horizon", "must be positive");
    if (c.max_steps < 0) bad("max_steps", "must be nonnegative (0 = default)");
    if (c.stride < 0) bad("stride", "must be nonnegative (0 = default)");
    if (!(c.r > 0.0)) bad("r", "must be positive");
    if (c.bins < 5) bad("bins", "must be at least 5");
    if (c.export_traces < 0) bad("export_traces", "must be nonnegative");
    if (c.init != "simple-edge" && c.init != "loop") bad("init", "expected simple-edge or loop");
    for (double x : c.x_list) {
        if (!(x > 0.0)) bad("x", "values must be positive");
    }
    for (double u : c.u_list) {
        if (!(u > 0.0)) bad("u", "values must be positive");
    }
    for (std::int64_t L : c.L_list) {
        if (L < 1) bad("L", "values must be positive");
        if (std::floor(c.a * static_cast<double>(L)) < 1.0) bad("L", "floor(a L) must be at least 1 for L = " + std::to_string(L));
        if (std::floor(c.b * static_cast<double>(L)) < 1.0) bad("L", "floor(b L) must be at least 1 for L = " + std::to_string(L));
    }
    const bool peeling = c.experiment == "peel-hit" || c.experiment == "peel-height";
    if (peeling && c.L_list.empty()) bad("L", "needs at least one value");
    if (c.experiment == "csbp-extinction" && c.x_list.empty()) bad("x", "needs at least one value");
    if (c.experiment == "tail" && c.u_list.empty()) bad("u", "needs at least one value");
    return c;
}

std::optional<ExperimentConfig> parse_config(int argc, const char* const* argv, std::ostream& out) {
    CLI::App app{"annulab: peeling and CSBP experiments for the Brownian annulus laws"};
    app.set_help_flag("-h,--help", "print this help");
    std::map<std::string, std::string> raw;
    struct Flag {
        const char* name;
        const char* key;
        const char* help;
    };
    const std::vector<Flag> flags{
        {"--experiment", "experiment", "verify-exact|peel-hit|peel-height|csbp-extinction|csbp-length|perimeter-law|occupation|tail"},
        {"--a", "a", "outer perimeter a"},
        {"--b", "b", "inner perimeter b"},
        {"--L", "L", "comma-separated scaling parameters"},
        {"--N", "N", "replicates"},
        {"--dt", "dt", "CSBP grid step"},
        {"--max-steps", "max_steps", "peeling step budget per replicate (0 = default)"},
        {"--horizon", "horizon", "CSBP time horizon"},
        {"--seed", "seed", "master seed"},
        {"--out", "out", "output directory (default $ANNULAB_OUT_DIR or ./annulab_out)"},
        {"--stride", "stride", "trace stride (0 = default)"},
        {"--workers", "workers", "worker threads (0 = hardware concurrency)"},
        {"--x", "x", "comma-separated starting values for csbp-extinction"},
        {"--r", "r", "hull radius for perimeter-law"},
        {"--u", "u", "comma-separated tail thresholds"},
        {"--bins", "bins", "chi-square cells"},
        {"--init", "init", "simple-edge|loop"},
        {"--export-traces", "export_traces", "full traces written per L by peel-height"},
    };
    for (const Flag& f : flags) app.add_option(f.name, raw[f.key], f.help);
    std::string config_file;
    app.add_option("--config", config_file, "JSON config file; flags override its values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string(e.what()) + "\n" + app.help());
    }

    json given = json::object();
    for (const Flag& f : flags) {
        if (app.get_option(f.name)->count() == 0) continue;
        const std::string key = f.key;
        const std::string& v = raw[key];
        if (key == "experiment" || key == "out" || key == "init") {
            given[key] = v;
        } else if (key == "L" || key == "x" || key == "u") {
            json arr = json::array();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    std::size_t pos = 0;
                    const double d = std::stod(item, &pos);
                    if (pos != item.size()) throw std::invalid_argument(item);
                    arr.push_back(d);
                } catch (const std::exception&) {
                    bad(key, "cannot parse '" + item + "' as a number");
                }
            }
            given[key] = arr;
        } else {
            try {
                std::size_t pos = 0;
                if (key == "seed") {
                    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
                    const unsigned long long s = std::stoull(v, &pos, 0);
                    if (pos != v.size()) throw std::invalid_argument(v);
                    given[key] = static_cast<std::uint64_t>(s);
                } else {
                    const double d = std::stod(v, &pos);
                    if (pos != v.size()) throw std::invalid_argument(v);
                    given[key] = d;
                }
            } catch (const std::exception&) {
                bad(key, "cannot parse '" + v + "'");
            }
        }
    }
    std::optional<std::filesystem::path> file;
    if (!config_file.empty()) file = config_file;
    if (!given.contains("experiment") && !file) {
        throw ConfigError("field 'experiment': missing\n" + app.help());
    }
    return resolve_config(given, file);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    ExperimentResult result;
    std::filesystem::create_directories(cfg.out_dir);
    Ctx ctx{cfg, log, result};
    const std::string& e = cfg.experiment;
    if (e == "verify-exact") run_verify_exact(ctx);
    else if (e == "peel-hit") run_peel_hit(ctx);
    else if (e == "peel-height") run_peel_height(ctx);
    else if (e == "csbp-extinction") run_csbp_extinction(ctx);
    else if (e == "csbp-length") run_csbp_length(ctx);
    else if (e == "perimeter-law") run_perimeter_law(ctx);
    else if (e == "occupation") run_occupation(ctx);
    else if (e == "tail") run_tail(ctx);
    else throw ConfigError("field 'experiment': unknown experiment '" + e + "'");

    result.all_pass = !result.reports.empty() &&
                      std::all_of(result.reports.begin(), result.reports.end(), [](const SummaryReport& r) { return r.verdict; });

    const auto json_path = cfg.out_dir / (e + ".json");
    result.artifacts.push_back(json_path);
    std::ofstream os(json_path);
    if (!os) throw std::runtime_error("cannot write " + json_path.string());
    os << summary_json(cfg, result).dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed for " + json_path.string());
    return result;
}

json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    json j;
    j["schema"] = 1;
    j["experiment"] = cfg.experiment;
    j["config"] = cfg.to_json();
    j["all_pass"] = result.all_pass;
    j["reports"] = json::array();
    for (const SummaryReport& r : result.reports) j["reports"].push_back(to_json(r));
    j["artifacts"] = json::array();
    for (const auto& p : result.artifacts) j["artifacts"].push_back(p.filename().string());
    return j;
}

}  // namespace annulab
