#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ttm/model.hpp"
#include "ttm/random.hpp"

namespace ttm {

// Scaled Beta on [t_min, t_max] with mean t_exp and shape budget
// alpha + beta = concentration.
struct DurationParams {
  double t_min = 1.0;
  double t_exp = 1.0;
  double t_max = 1.0;
  double concentration = 4.0;

  void validate() const;
};

// Always consumes exactly one 64-bit variate from `rng`, including for
// degenerate supports, so that streams stay aligned across models.
double sample_duration(const DurationParams& params, Rng& rng);

struct SimOptions {
  double tick = 1.0;
  double concentration = 4.0;
};

// A maximal run of ticks [begin, end) over which the active set is constant.
struct TickSpan {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  ActivitySet active;
  std::vector<int> used;  // resources with nonzero claimed units

  bool operator==(const TickSpan&) const = default;
};

// Result of one process execution. Tick t covers [t * tick, (t + 1) * tick).
// Ticks are stored run-length encoded; tick_count() and at_tick() give the
// per-tick view.
struct SimulationTrace {
  double tick = 1.0;
  std::vector<TickSpan> spans;
  std::vector<double> starts;
  std::vector<double> completions;
  double total_time = 0.0;

  std::int64_t tick_count() const noexcept { return spans.empty() ? 0 : spans.back().end; }
  const TickSpan& at_tick(std::int64_t t) const;

  bool operator==(const SimulationTrace&) const = default;
};

// Executes the process tick by tick. At each tick boundary activities whose
// duration has elapsed complete and release their resources; then every
// pending activity whose parents are all complete tries, in ascending id
// order, an all-or-nothing claim of its requirement vector.
//
// Durations are drawn once per activity, in id order, from a stream seeded
// with `seed`, before execution begins.
SimulationTrace run_simulation(const ProcessModel& model, std::uint64_t seed,
                               const SimOptions& options = {});

// Like run_simulation, but the activities in `completed` (which must be
// ancestor-closed) are finished at time zero and use no resources.
// `in_progress` optionally maps running activities to time already spent on
// them; they start at time zero holding their resources with the elapsed
// time credited. total_time is the remaining duration.
SimulationTrace resume_simulation(const ProcessModel& model, const ActivitySet& completed,
                                  std::uint64_t seed, const SimOptions& options = {},
                                  const std::map<int, double>& in_progress = {});

// Seed i of the ensemble derived from a single master seed.
std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t count);

// Element i equals run_simulation(model, seeds[i], options). Up to `workers`
// threads are used.
std::vector<SimulationTrace> run_ensemble(const ProcessModel& model,
                                          std::span<const std::uint64_t> seeds,
                                          const SimOptions& options = {}, unsigned workers = 1);

}  // namespace ttm
