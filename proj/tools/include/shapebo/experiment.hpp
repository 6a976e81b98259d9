#pragma once

#include "shapebo/benchmarks.hpp"
#include "shapebo/bo_loop.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shapebo {

/// A config file could not be read or failed validation. `line()` is 1-based
/// and 0 when no position applies.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)), line_(line) {}
    const std::string& key() const { return key_; }
    int line() const { return line_; }

private:
    std::string key_;
    int line_;
};

struct ExperimentConfig {
    std::string objective;
    Box box;
    std::vector<Shape> constraints;
    std::vector<std::uint64_t> seeds;
    std::size_t init_count = 5;
    std::size_t iterations = 30;
    std::size_t mc_samples = 200;
    std::size_t chain_len = kDefaultChainLength;
    std::size_t burn_in = kDefaultBurnIn;
    Index grid_size = 100;
    std::size_t refit_every = 1;
    std::size_t max_tries = 20000;
    double noise_sd = 0.05;
    std::size_t n_sims = 100;
    std::filesystem::path output_dir = "results";

    Index dim() const { return box.dim(); }
    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Parses the YAML grammar documented in docs/config.md. Unknown keys,
/// malformed values and missing required keys throw ConfigError.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_string(std::string_view text);

/// "1,2,7" or "1-50" or a mix such as "1-3,9".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

enum class Arm { Constrained, Unconstrained };
std::string_view to_string(Arm arm);

struct SeedRun {
    std::uint64_t seed = 0;
    Arm arm = Arm::Constrained;
    std::vector<RunRecord> trace;
    /// Set when the objective failed; `trace` then holds the completed rows.
    std::optional<std::string> error;
};

struct ExperimentResult {
    /// Seed-major, constrained arm before unconstrained for each seed.
    std::vector<SeedRun> runs;
    bool failed() const;
};

BoOptions bo_options(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs every seed twice (configured shapes, then all None) on a pool of
/// `jobs` workers. Both arms of a seed share the initial design and the
/// objective noise stream. Nothing is written; progress lines go to `log`.
ExperimentResult execute(const ExperimentConfig& cfg, unsigned jobs, std::ostream* log = nullptr);

/// Trace CSV header for a d-dimensional problem.
std::string trace_header(Index d);

/// Writes trace_<arm>.csv and incumbent_<arm>.csv into cfg.output_dir.
void write_traces(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Per-iteration percentile table of one arm across seeds.
struct ArmSummary {
    std::vector<std::size_t> iteration;
    std::vector<std::size_t> n_seeds;
    std::vector<double> mean, p2_5, p25, median, p75, p97_5;
    /// Median across seeds of the incumbent 95% interval width; empty when
    /// the incumbent files are absent.
    std::vector<double> width_median;
};

struct Summary {
    ArmSummary constrained;
    ArmSummary unconstrained;
    /// First iteration at which the constrained median is strictly below the
    /// unconstrained one.
    std::optional<std::size_t> first_dominance;
    std::string report;
};

/// Reads the traces in `dir`, writes summary.csv and report.txt there.
/// Throws std::runtime_error when trace files are missing, malformed or empty.
Summary summarize(const std::filesystem::path& dir);

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> v, double q);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

}  // namespace shapebo
