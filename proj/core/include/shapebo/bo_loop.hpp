#pragma once

#include "shapebo/acquisition.hpp"
#include "shapebo/constraints.hpp"
#include "shapebo/gp.hpp"
#include "shapebo/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace shapebo {

/// Objective callback: point in the original box, plus a per-evaluation seed
/// for stochastic objectives. Evaluation i of a run always receives the same
/// seed, so two runs sharing a seed share their noise stream.
using Objective = std::function<double(const Vector& x, std::uint64_t eval_seed)>;

struct BoOptions {
    std::size_t init_count = 5;
    std::size_t iterations = 30;
    std::size_t refit_every = 1;
    std::size_t chain_len = kDefaultChainLength;
    std::size_t burn_in = kDefaultBurnIn;
    std::size_t mc_samples = 200;
    std::size_t max_tries = 20000;
    int lhs_restarts = 20;
    /// Fresh LHS candidates per iteration on continuous domains.
    Index candidate_count = 512;
    /// Candidates are the integer lattice points of the box and every queried
    /// point is rounded to it.
    bool integer_domain = false;
    PriorConfig priors;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One objective evaluation. Rows are numbered from 0 over the initial design
/// and the BO iterations alike; the incumbent reflects the surrogate fitted on
/// all data up to and including this row (absent for initial-design rows
/// before the first fit).
struct RunRecord {
    std::size_t iteration = 0;
    Vector queried_point;
    double observed_y = 0.0;
    std::optional<Incumbent> incumbent;  // point in original box coordinates
    std::optional<HyperParams> hyperparams;  // unit-box parameterization
    std::optional<double> acceptance_rate;
    bool random_fallback = false;
    bool unconstrained_fallback = false;
    bool used_hmc = false;
    double wall_ms = 0.0;
};

/// The objective threw; `trace()` holds every completed row.
class BoAborted : public std::runtime_error {
public:
    BoAborted(const std::string& what, std::vector<RunRecord> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<RunRecord>& trace() const { return trace_; }

private:
    std::vector<RunRecord> trace_;
};

/// Integer lattice points of a box, row per point, first coordinate fastest.
Matrix integer_candidates(const Box& box);

/// Sequential BO: maximin-LHS initial design, then per iteration refit (every
/// refit_every), condition, sample, propose, evaluate. Only the per_dim shapes
/// of `shapes` are used; the enforcement grid is generated once per run in
/// the unit box from options.seed. Returns init_count + iterations records.
std::vector<RunRecord> bo_run(const Objective& objective, const Box& box, const ConstraintSpec& shapes,
                              const BoOptions& options);

}  // namespace shapebo
