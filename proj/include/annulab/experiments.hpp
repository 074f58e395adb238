#pragma once

// Experiment configuration, dispatch and artifact writing behind the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "annulab/stats.hpp"

namespace annulab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"verify-exact", "peel-hit",     "peel-height", "csbp-extinction",
                                                "csbp-length",  "perimeter-law", "occupation", "tail"};
    return names;
}

struct ExperimentConfig {
    std::string experiment;
    double a = 1.0;
    double b = 1.0;
    std::vector<std::int64_t> L_list;
    std::int64_t N = 0;
    double dt = 1e-3;
    /// peeling step budget per replicate; 0 picks an experiment default
    std::int64_t max_steps = 0;
    double horizon = 1e4;
    std::uint64_t seed = 42;
    std::filesystem::path out_dir;
    /// trace stride; 0 means max(1, floor(L^{3/2} / 2048))
    std::int64_t stride = 0;
    unsigned workers = 0;
    /// starting values for csbp-extinction
    std::vector<double> x_list;
    /// hull radius for perimeter-law
    double r = 1.0;
    /// tail thresholds
    std::vector<double> u_list;
    int bins = 40;
    std::string init = "simple-edge";
    /// number of replicates whose full trace is exported by peel-height
    std::int64_t export_traces = 4;

    nlohmann::json to_json() const;
};

/// Defaults that depend on the experiment (N, L list, x list, u list).
nlohmann::json experiment_defaults(const std::string& experiment);

/// Merges defaults < config file < explicit values, then validates. `explicit_values`
/// holds only the keys given on the command line. Unknown keys and out-of-range
/// values raise ConfigError naming the field.
ExperimentConfig resolve_config(const nlohmann::json& explicit_values,
                                const std::optional<std::filesystem::path>& config_file);

/// Parses argv (CLI11). Returns nullopt when help was printed.
std::optional<ExperimentConfig> parse_config(int argc, const char* const* argv, std::ostream& out);

struct ExperimentResult {
    std::vector<SummaryReport> reports;
    bool all_pass = false;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one experiment and writes <out>/<experiment>.json plus its CSV files.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Output directory when none is configured: $ANNULAB_OUT_DIR, else ./annulab_out.
std::filesystem::path default_out_dir();

}  // namespace annulab
