// Acceptance run: one line per criterion, each with its measured statistic and
// runtime against the limit. Exit status is 0 only when every criterion passes.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "annulab/experiments.hpp"

using namespace annulab;

namespace {

struct Run {
    ExperimentResult result;
    double seconds = 0.0;
};

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;
    std::function<void()> body;
};

std::filesystem::path g_out;
unsigned g_workers = 0;
std::map<std::string, Run> g_cache;
int g_failed = 0;

Run& run(const std::string& key, nlohmann::json values) {
    auto it = g_cache.find(key);
    if (it != g_cache.end()) return it->second;
    values["out"] = (g_out / key).string();
    values["workers"] = g_workers;
    const ExperimentConfig cfg = resolve_config(values, std::nullopt);
    Run r;
    const auto t0 = std::chrono::steady_clock::now();
    r.result = run_experiment(cfg, nullptr);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g_cache.emplace(key, std::move(r)).first->second;
}

const SummaryReport& report(const Run& r, const std::string& id) {
    for (const auto& rep : r.result.reports)
        if (rep.id == id) return rep;
    throw std::runtime_error("missing report " + id);
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

// "id: statistic (limit threshold)"
std::string describe(const SummaryReport& r) {
    return r.id + " " + r.statistic_name + "=" + num(r.statistic) + (r.pass_below ? " (<= " : " (>= ") +
           num(r.threshold) + ")";
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> parts;
    double seconds = 0.0;

    void take(const SummaryReport& r) {
        pass = pass && r.verdict;
        parts.push_back(describe(r) + (r.verdict ? "" : " FAIL"));
    }
};

Outcome* g_current = nullptr;

void check(const Run& r, const std::string& id) {
    g_current->take(report(r, id));
}

void time_of(const Run& r) { g_current->seconds += r.seconds; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"annulab acceptance criteria"};
    std::string out = "acceptance_out";
    std::vector<int> only;
    app.add_option("--out", out, "directory for experiment artifacts");
    app.add_option("--only", only, "criteria to run (default all)")->delimiter(',');
    app.add_option("--workers", g_workers, "worker threads (0 = hardware concurrency)");
    CLI11_PARSE(app, argc, argv);
    g_out = out;

    using nlohmann::json;
    const std::vector<Criterion> criteria{
        {1, "exact enumeration: z1 series vs closed form, L = 2..30", 60,
         [] {
             const Run& r = run("verify-exact", {{"experiment", "verify-exact"}});
             check(r, "verify-exact/z1-series-vs-closed-form");
             time_of(r);
         }},
        {2, "kernel stochasticity, h-transform, two q_L definitions", 300,
         [] {
             const Run& r = run("verify-exact", {{"experiment", "verify-exact"}});
             check(r, "verify-exact/q-inf-row-sums");
             check(r, "verify-exact/h-transform-harmonicity");
             check(r, "verify-exact/q-L-two-definitions");
             time_of(r);
         }},
        {3, "cemetery asymptotics at L = 1e4", 60,
         [] {
             const Run& r = run("verify-exact", {{"experiment", "verify-exact"}});
             check(r, "verify-exact/cemetery-asymptotics-L1e4");
             time_of(r);
         }},
        {4, "discrete hitting probability, (1,1), L = 50..400, N = 1e4", 1800,
         [] {
             const Run& r = run("peel-hit", {{"experiment", "peel-hit"}, {"a", 1.0}, {"b", 1.0}, {"N", 10000},
                                             {"L", {50, 100, 200, 400}}});
             check(r, "peel-hit/limit");
             check(r, "peel-hit/trend");
             time_of(r);
         }},
        {5, "continuum hitting probability, (a,b) in {(1,1),(1,2),(2,1)}, N = 1e4", 600,
         [] {
             for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 1.0}}) {
                 const std::string key = "csbp-visit-a" + num(a) + "-b" + num(b);
                 const Run& r = run(key, {{"experiment", "csbp-length"}, {"a", a}, {"b", b}, {"N", 10000},
                                          {"dt", 1e-3}});
                 g_current->take(report(r, "csbp-length/visit"));
                 g_current->parts.back() += " [a=" + num(a) + " b=" + num(b) + "]";
                 time_of(r);
             }
         }},
        {6, "extinction CDF KS, x in {0.5,1,2}, N = 1e4", 600,
         [] {
             const Run& r = run("csbp-extinction", {{"experiment", "csbp-extinction"}, {"N", 10000},
                                                    {"x", {0.5, 1.0, 2.0}}, {"dt", 1e-3}});
             for (const char* x : {"0.5", "1", "2"}) check(r, std::string("csbp-extinction/x=") + x);
             time_of(r);
         }},
        {7, "annulus length mean at (1,1), N = 1e5; closed-form symmetry and scaling", 1800,
         [] {
             const Run& r = run("csbp-length", {{"experiment", "csbp-length"}, {"a", 1.0}, {"b", 1.0},
                                                {"N", 100000}, {"dt", 1e-3}});
             check(r, "csbp-length/mean");
             check(r, "csbp-length/closed-form");
             time_of(r);
         }},
        {8, "tail u^2 P(length > u) at u in {10,20}, N = 1e6", 3600,
         [] {
             const Run& r = run("tail", {{"experiment", "tail"}, {"a", 1.0}, {"b", 1.0}, {"N", 1000000},
                                         {"u", {10.0, 20.0}}, {"dt", 1e-3}});
             check(r, "tail/u=10");
             check(r, "tail/u=20");
             time_of(r);
         }},
        {9, "hull-perimeter law at a = 1, r = 1, N = 1e5, 40 bins", 1800,
         [] {
             const Run& r = run("perimeter-law", {{"experiment", "perimeter-law"}, {"a", 1.0}, {"r", 1.0},
                                                  {"N", 100000}, {"bins", 40}, {"dt", 1e-3}});
             check(r, "perimeter-law/shape");
             check(r, "perimeter-law/mass");
             time_of(r);
         }},
        {10, "height-integral residual median decreases from L = 1e2 to 1e4, 200 traces", 1800,
         [] {
             const Run& r = run("peel-height", {{"experiment", "peel-height"}, {"L", {100, 10000}}, {"N", 200}});
             check(r, "peel-height");
             time_of(r);
         }},
        {11, "scalar identities", 10,
         [] {
             const Run& r = run("verify-exact", {{"experiment", "verify-exact"}});
             for (const char* id : {"hit-prob-integral(1,1)", "hit-prob-integral(2,5)", "convolution-identity(1,1)",
                                    "convolution-identity(4,1)", "normalization-identity", "scale-w-laplace(0.5)",
                                    "scale-w-laplace(1)", "scale-w-laplace(2)", "scale-wtilde-laplace(0.5)",
                                    "scale-wtilde-laplace(1)", "scale-wtilde-laplace(2)"})
                 check(r, std::string("verify-exact/") + id);
             time_of(r);
         }},
        {12, "occupation formula for f(y) = y exp(-y), a = 1, N = 1e5", 900,
         [] {
             const Run& r = run("occupation", {{"experiment", "occupation"}, {"a", 1.0}, {"N", 100000}, {"dt", 1e-3}});
             check(r, "occupation");
             time_of(r);
         }},
    };

    const std::set<int> wanted(only.begin(), only.end());
    int ran = 0;
    for (const Criterion& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        ++ran;
        Outcome o;
        g_current = &o;
        try {
            c.body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.parts.push_back(std::string("error: ") + e.what());
        }
        const bool in_time = o.seconds <= c.limit_seconds;
        const bool pass = o.pass && in_time;
        g_failed += !pass;
        std::ostringstream line;
        line << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " | " << c.title << " | ";
        for (std::size_t i = 0; i < o.parts.size(); ++i) line << (i ? "; " : "") << o.parts[i];
        line << " | runtime " << num(o.seconds) << " s (limit " << num(c.limit_seconds) << " s"
             << (in_time ? ")" : ", exceeded)");
        std::cout << line.str() << std::endl;
    }
    std::cout << "acceptance: " << (ran - g_failed) << "/" << ran << " criteria pass" << std::endl;
    return g_failed == 0 ? 0 : 1;
}
