#include "shapebo/bo_loop.hpp"

#include "shapebo/design.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace shapebo {

namespace {

// Sub-stream tags; the design, grid and noise streams are shared by every
// run with the same seed regardless of its constraint spec.
enum StreamTag : std::uint64_t {
    kDesignStream = 0x10,
    kGridStream = 0x11,
    kNoiseStream = 0x12,
    kFitStream = 0x13,
    kStepStream = 0x14,
    kCandidateStream = 0x15,
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Vector snap(const Box& box, Vector x, bool integer) {
    if (integer) {
        for (Index i = 0; i < x.size(); ++i) {
            x(i) = std::clamp(std::round(x(i)), std::ceil(box.lower(i)), std::floor(box.upper(i)));
        }
    }
    return x;
}

}  // namespace

void BoOptions::validate() const {
    if (init_count < 2) {
        throw ArgumentError("init_count must be at least 2");
    }
    if (iterations < 1) {
        throw ArgumentError("iterations must be at least 1");
    }
    if (refit_every < 1) {
        throw ArgumentError("refit_every must be at least 1");
    }
    if (chain_len == 0 || burn_in >= chain_len) {
        throw ArgumentError("chain_len must exceed burn_in");
    }
    if (mc_samples < 1) {
        throw ArgumentError("mc_samples must be at least 1");
    }
    if (candidate_count < 1 || lhs_restarts < 1) {
        throw ArgumentError("candidate_count and lhs_restarts must be positive");
    }
    priors.validate();
}

Matrix integer_candidates(const Box& box) {
    box.validate();
    const Index d = box.dim();
    std::vector<long long> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    long long total = 1;
    for (Index i = 0; i < d; ++i) {
        lo[static_cast<std::size_t>(i)] = static_cast<long long>(std::ceil(box.lower(i)));
        hi[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor(box.upper(i)));
        const long long span = hi[static_cast<std::size_t>(i)] - lo[static_cast<std::size_t>(i)] + 1;
        if (span < 1) {
            throw ArgumentError("box dimension " + std::to_string(i) + " contains no integers");
        }
        total *= span;
        if (total > 1'000'000) {
            throw ArgumentError("integer domain has more than 1e6 lattice points");
        }
    }
    Matrix out(total, d);
    std::vector<long long> cur = lo;
    for (long long r = 0; r < total; ++r) {
        for (Index i = 0; i < d; ++i) {
            out(r, i) = static_cast<double>(cur[static_cast<std::size_t>(i)]);
        }
        for (Index i = 0; i < d; ++i) {
            auto k = static_cast<std::size_t>(i);
            if (++cur[k] <= hi[k]) {
                break;
            }
            cur[k] = lo[k];
        }
    }
    return out;
}

std::vector<RunRecord> bo_run(const Objective& objective, const Box& box, const ConstraintSpec& shapes,
                              const BoOptions& options) {
    box.validate();
    options.validate();
    const Index d = box.dim();
    if (shapes.dim() != d) {
        throw ArgumentError("constraint spec has " + std::to_string(shapes.dim()) + " dimensions, box has " +
                            std::to_string(d));
    }

    Matrix fixed_candidates;
    if (options.integer_domain) {
        const Matrix lattice = integer_candidates(box);
        fixed_candidates.resize(lattice.rows(), d);
        for (Index r = 0; r < lattice.rows(); ++r) {
            fixed_candidates.row(r) = box.to_unit(lattice.row(r).transpose()).transpose();
        }
    }

    std::vector<RunRecord> trace;
    trace.reserve(options.init_count + options.iterations);
    Dataset data;
    data.points.resize(0, d);
    data.values.resize(0);

    auto evaluate = [&](const Vector& x, Clock::time_point start) {
        const std::size_t row = trace.size();
        double y = 0.0;
        try {
            y = objective(x, derive_seed(options.seed, kNoiseStream, row));
        } catch (const std::exception& e) {
            throw BoAborted(std::string("objective failed at evaluation ") + std::to_string(row) + ": " +
                                e.what(),
                            trace);
        }
        if (!std::isfinite(y)) {
            throw BoAborted("objective returned a non-finite value at evaluation " + std::to_string(row), trace);
        }
        RunRecord rec;
        rec.iteration = row;
        rec.queried_point = x;
        rec.observed_y = y;
        const Index n = data.size();
        data.points.conservativeResize(n + 1, d);
        data.points.row(n) = box.to_unit(x).transpose();
        data.values.conservativeResize(n + 1);
        data.values(n) = y;
        rec.wall_ms = elapsed_ms(start);
        trace.push_back(std::move(rec));
    };

    const LhsDesign design =
        maximin_lhs(static_cast<Index>(options.init_count), d, derive_seed(options.seed, kDesignStream),
                    options.lhs_restarts);
    for (Index i = 0; i < design.points.rows(); ++i) {
        const auto start = Clock::now();
        evaluate(snap(box, box.from_unit(design.points.row(i).transpose()), options.integer_domain), start);
    }

    Surrogate surrogate;
    surrogate.spec = shapes;
    Matrix lhs_grid(0, d);
    if (shapes.active()) {
        if (shapes.grid_size < 1) {
            throw ArgumentError("grid_size must be positive");
        }
        lhs_grid = maximin_lhs(shapes.grid_size, d,
                               derive_seed(options.seed, kGridStream), options.lhs_restarts)
                       .points;
    }

    for (std::size_t t = 0; t <= options.iterations; ++t) {
        const auto start = Clock::now();
        surrogate.data = data;
        if (t % options.refit_every == 0) {
            surrogate.theta = fit_hyperparams(data, options.priors, options.chain_len, options.burn_in,
                                              derive_seed(options.seed, kFitStream, t))
                                  .params;
        }
        if (shapes.active()) {
            surrogate.spec.grid = enforcement_grid(lhs_grid, data.points);
        }
        Matrix candidates;
        if (options.integer_domain) {
            candidates = fixed_candidates;
        } else {
            candidates = maximin_lhs(options.candidate_count, d, derive_seed(options.seed, kCandidateStream, t), 1)
                             .points;
        }
        const StepAnalysis step =
            analyze_step(candidates, surrogate, options.mc_samples, derive_seed(options.seed, kStepStream, t),
                         options.max_tries);

        RunRecord& last = trace.back();
        Incumbent inc = step.incumbent;
        inc.point = trace[static_cast<std::size_t>(inc.index)].queried_point;
        last.incumbent = inc;
        last.hyperparams = surrogate.theta;
        last.acceptance_rate = step.posterior.acceptance_rate;
        last.unconstrained_fallback = step.posterior.unconstrained_fallback;
        last.used_hmc = step.posterior.used_hmc;
        const double analysis_ms = elapsed_ms(start);
        last.wall_ms += analysis_ms;

        if (t == options.iterations) {
            break;
        }
        const Vector x = snap(box, box.from_unit(step.proposal.point), options.integer_domain);
        const auto eval_start = Clock::now();
        evaluate(x, eval_start);
        trace.back().random_fallback = step.proposal.random_fallback;
    }
    return trace;
}

}  // namespace shapebo
