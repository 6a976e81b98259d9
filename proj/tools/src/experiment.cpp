#include "shapebo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

namespace shapebo {

std::string_view to_string(Arm arm) { return arm == Arm::Constrained ? "constrained" : "unconstrained"; }

bool ExperimentResult::failed() const {
    return std::any_of(runs.begin(), runs.end(), [](const SeedRun& r) { return r.error.has_value(); });
}

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

BoOptions bo_options(const ExperimentConfig& cfg, std::uint64_t seed) {
    BoOptions o;
    o.init_count = cfg.init_count;
    o.iterations = cfg.iterations;
    o.refit_every = cfg.refit_every;
    o.chain_len = cfg.chain_len;
    o.burn_in = cfg.burn_in;
    o.mc_samples = cfg.mc_samples;
    o.max_tries = cfg.max_tries;
    o.integer_domain = lookup_objective(cfg.objective).integer_domain;
    o.seed = seed;
    return o;
}

ExperimentResult execute(const ExperimentConfig& cfg, unsigned jobs, std::ostream* log) {
    cfg.validate();
    const TestFunction fn = lookup_objective(cfg.objective, ObjectiveParams{cfg.noise_sd, cfg.n_sims});

    ExperimentResult result;
    for (std::uint64_t seed : cfg.seeds) {
        for (Arm arm : {Arm::Constrained, Arm::Unconstrained}) {
            result.runs.push_back(SeedRun{seed, arm, {}, std::nullopt});
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < result.runs.size(); i = next++) {
            SeedRun& run = result.runs[i];
            ConstraintSpec spec = ConstraintSpec::unconstrained(cfg.dim());
            if (run.arm == Arm::Constrained) spec.per_dim = cfg.constraints;
            spec.grid_size = cfg.grid_size;
            const auto start = std::chrono::steady_clock::now();
            try {
                run.trace = bo_run(fn.objective, cfg.box, spec, bo_options(cfg, run.seed));
            } catch (const BoAborted& e) {
                run.trace = e.trace();
                run.error = e.what();
            } catch (const std::exception& e) {
                run.error = e.what();
            }
            if (log) {
                const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                std::lock_guard lock(log_mutex);
                *log << "seed " << run.seed << ' ' << to_string(run.arm) << ": "
                     << (run.error ? "failed: " + *run.error : "done") << " (" << format_double(std::round(s * 10) / 10)
                     << " s)\n";
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(result.runs.size())));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return result;
}

std::string trace_header(Index d) {
    std::string h = "seed,iteration,arm";
    for (Index i = 0; i < d; ++i) h += ",x" + std::to_string(i);
    return h + ",y,incumbent_value,acceptance_rate,wall_ms";
}

namespace {

std::string incumbent_header(Index d) {
    std::string h = "seed,iteration,arm";
    for (Index i = 0; i < d; ++i) h += ",incumbent_x" + std::to_string(i);
    return h + ",incumbent_value,lower95,upper95,used_hmc,unconstrained_fallback,random_fallback";
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace

void write_traces(const ExperimentConfig& cfg, const ExperimentResult& result) {
    std::filesystem::create_directories(cfg.output_dir);
    const Index d = cfg.dim();
    for (Arm arm : {Arm::Constrained, Arm::Unconstrained}) {
        const std::string name(to_string(arm));
        auto trace = open_out(cfg.output_dir / ("trace_" + name + ".csv"));
        auto inc = open_out(cfg.output_dir / ("incumbent_" + name + ".csv"));
        trace << trace_header(d) << '\n';
        inc << incumbent_header(d) << '\n';
        for (const SeedRun& run : result.runs) {
            if (run.arm != arm) continue;
            for (const RunRecord& r : run.trace) {
                const std::string prefix = std::to_string(run.seed) + ',' + std::to_string(r.iteration) + ',' + name;
                trace << prefix;
                for (Index i = 0; i < d; ++i) trace << ',' << format_double(r.queried_point(i));
                trace << ',' << format_double(r.observed_y) << ','
                      << (r.incumbent ? format_double(r.incumbent->posterior_expected_value) : "") << ','
                      << (r.acceptance_rate ? format_double(*r.acceptance_rate) : "");
                char ms[32];
                std::snprintf(ms, sizeof ms, "%.3f", r.wall_ms);
                trace << ',' << ms << '\n';

                if (!r.incumbent) continue;
                inc << prefix;
                for (Index i = 0; i < d; ++i) inc << ',' << format_double(r.incumbent->point(i));
                inc << ',' << format_double(r.incumbent->posterior_expected_value) << ','
                    << format_double(r.incumbent->lower95) << ',' << format_double(r.incumbent->upper95) << ','
                    << int(r.used_hmc) << ',' << int(r.unconstrained_fallback) << ',' << int(r.random_fallback)
                    << '\n';
            }
        }
        if (!trace || !inc) throw std::runtime_error("write failed in " + cfg.output_dir.string());
    }
}

}  // namespace shapebo
