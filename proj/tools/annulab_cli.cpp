#include <exception>
#include <iostream>

#include "annulab/experiments.hpp"

int main(int argc, char** argv) {
    using namespace annulab;
    try {
        const auto cfg = parse_config(argc, argv, std::cout);
        if (!cfg) return 0;
        const ExperimentResult result = run_experiment(*cfg, &std::cerr);
        for (const SummaryReport& r : result.reports) {
            std::cout << (r.verdict ? "PASS " : "FAIL ") << r.id << "  " << r.statistic_name << " = " << r.statistic
                      << " (threshold " << r.threshold << ")\n";
        }
        std::cout << "wrote " << (cfg->out_dir / (cfg->experiment + ".json")).string() << '\n';
        return result.all_pass ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
