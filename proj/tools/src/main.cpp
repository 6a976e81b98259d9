#include "selftest.hpp"
#include "shapebo/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

constexpr const char* kConfigHelp = R"(Config file (YAML), see docs/config.md:
  objective    required  binomial | synthetic-qc-2d | quad-1d | logistic-1d | vee-1d
  box          required  list of [lower, upper] pairs, one per dimension
  constraints  required  one shape per dimension: none, increasing, decreasing,
                         convex, concave, quasiconvex
  seeds        required  list of integers or a range string such as "1-50"
  iterations   30        init_count  5       mc_samples 200    grid_size 100
  chain_len    20000     burn_in     5000    refit_every 1     max_tries 20000
  noise_sd     0.05      n_sims      100     output_dir results
Seed precedence: --seeds, then SHAPEBO_SEED, then the config file.
Exit codes: 0 success, 1 config or usage error, 2 runtime or objective error.)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shape-constrained Gaussian-process Bayesian optimization experiments"};
    app.require_subcommand(1);
    app.footer(kConfigHelp);

    std::string config_path;
    std::string seeds;
    std::size_t iterations = 0;
    std::string output_dir;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run the constrained and unconstrained arms for every seed");
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("--seeds", seeds, "Seed list overriding the config, e.g. 1,2,5 or 1-50");
    run->add_option("--iterations", iterations, "BO iterations overriding the config")->check(CLI::PositiveNumber);
    run->add_option("--output-dir", output_dir, "Output directory overriding the config");
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", quiet, "Suppress per-run progress lines");

    std::string summary_dir;
    auto* summarize = app.add_subcommand("summarize", "Percentile summary and report of a results directory");
    summarize->add_option("dir", summary_dir, "Directory holding trace_*.csv")->required();

    auto* selftest = app.add_subcommand("selftest", "Run the fast invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    if (selftest->parsed()) {
        return shapebo::run_selftest(std::cout);
    }

    if (summarize->parsed()) {
        try {
            std::cout << shapebo::summarize(summary_dir).report;
            return kOk;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kRuntimeError;
        }
    }

    shapebo::ExperimentConfig cfg;
    try {
        cfg = shapebo::parse_config(config_path);
        if (const char* env = std::getenv("SHAPEBO_SEED"); env && *env) {
            try {
                cfg.seeds = shapebo::parse_seed_list(env);
            } catch (const std::invalid_argument& e) {
                throw shapebo::ConfigError("SHAPEBO_SEED", 0, std::string("SHAPEBO_SEED: ") + e.what());
            }
        }
        if (!seeds.empty()) {
            try {
                cfg.seeds = shapebo::parse_seed_list(seeds);
            } catch (const std::invalid_argument& e) {
                throw shapebo::ConfigError("--seeds", 0, std::string("--seeds: ") + e.what());
            }
        }
        if (iterations > 0) cfg.iterations = iterations;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        cfg.validate();
    } catch (const shapebo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        const shapebo::ExperimentResult result = shapebo::execute(cfg, jobs, quiet ? nullptr : &std::cerr);
        shapebo::write_traces(cfg, result);
        if (result.failed()) {
            for (const auto& r : result.runs) {
                if (r.error) {
                    std::cerr << "error: seed " << r.seed << ' ' << shapebo::to_string(r.arm) << ": " << *r.error
                              << '\n';
                }
            }
            std::cerr << "partial traces written to " << cfg.output_dir.string() << '\n';
            return kRuntimeError;
        }
        std::cout << shapebo::summarize(cfg.output_dir).report;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
