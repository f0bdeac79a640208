#include "ttm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ttm/errors.hpp"
#include "ttm/parallel.hpp"

namespace ttm {

void DurationParams::validate() const {
  if (!(t_min <= t_exp && t_exp <= t_max))
    throw InvalidParameter("duration: expected t_min <= t_exp <= t_max");
  if (!(concentration > 0.0)) throw InvalidParameter("duration: concentration must be positive");
}

double sample_duration(const DurationParams& params, Rng& rng) {
  params.validate();
  const std::uint64_t local_seed = rng();
  const double width = params.t_max - params.t_min;
  if (width <= 0.0) return params.t_min;

  const double alpha = params.concentration * (params.t_exp - params.t_min) / width;
  const double beta = params.concentration - alpha;
  if (alpha <= 0.0) return params.t_min;
  if (beta <= 0.0) return params.t_max;

  Rng local(local_seed);
  const double x = std::gamma_distribution<double>(alpha, 1.0)(local);
  const double y = std::gamma_distribution<double>(beta, 1.0)(local);
  // Both gammas can underflow for very small shapes.
  const double fraction = (x + y) > 0.0 ? x / (x + y) : alpha / params.concentration;
  return std::clamp(params.t_min + fraction * width, params.t_min, params.t_max);
}

const TickSpan& SimulationTrace::at_tick(std::int64_t t) const {
  if (t < 0 || t >= tick_count()) throw InvalidParameter("trace: tick out of range");
  auto it = std::upper_bound(spans.begin(), spans.end(), t,
                             [](std::int64_t value, const TickSpan& s) { return value < s.end; });
  return *it;
}

namespace {

enum class Status : std::uint8_t { Pending, Running, Done };

std::int64_t ticks_for(double duration, double tick) {
  const double raw = std::ceil(duration / tick - 1e-9);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
}

void check_structure(const ProcessModel& model) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  for (std::size_t j = 0; j < n; ++j) {
    const Activity& a = model.activities[j];
    if (a.required.size() != m)
      throw InvalidParameter("simulation: activity " + std::to_string(j) + " has a requirement vector of the wrong length");
    for (int parent : a.parents)
      if (parent < 0 || static_cast<std::size_t>(parent) >= j)
        throw InvalidParameter("simulation: activity " + std::to_string(j) + " has a parent out of topological order");
  }
}

SimulationTrace execute(const ProcessModel& model, const ActivitySet& completed, std::uint64_t seed,
                        const SimOptions& options, const std::map<int, double>& in_progress) {
  if (!(options.tick > 0.0)) throw InvalidParameter("simulation: tick must be positive");
  check_structure(model);

  const std::size_t n = model.n();
  const std::size_t m = model.m();
  const double tick = options.tick;

  Rng rng(seed);
  std::vector<std::int64_t> duration_ticks(n);
  std::vector<double> durations(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Activity& a = model.activities[j];
    durations[j] = sample_duration({a.t_min, a.t_exp, a.t_max, options.concentration}, rng);
    duration_ticks[j] = ticks_for(durations[j], tick);
  }

  SimulationTrace trace;
  trace.tick = tick;
  trace.starts.assign(n, 0.0);
  trace.completions.assign(n, 0.0);

  std::vector<Status> status(n, Status::Pending);
  std::vector<std::int64_t> end_tick(n, 0);
  std::vector<long long> free_units(model.availability.begin(), model.availability.end());
  std::size_t done = 0;

  for (int j : completed) {
    if (j < 0 || static_cast<std::size_t>(j) >= n) throw InvalidParameter("simulation: completed id out of range");
    if (status[j] == Status::Done) continue;
    status[j] = Status::Done;
    ++done;
  }
  for (int j : completed)
    for (int parent : model.activities[j].parents)
      if (status[parent] != Status::Done)
        throw InvalidParameter("simulation: completed set is not ancestor-closed (activity " + std::to_string(j) +
                               " needs " + std::to_string(parent) + ")");

  auto claim = [&](std::size_t j, std::int64_t now, std::int64_t length) {
    for (std::size_t l = 0; l < m; ++l) free_units[l] -= model.activities[j].required[l];
    status[j] = Status::Running;
    trace.starts[j] = static_cast<double>(now) * tick;
    end_tick[j] = now + length;
  };
  auto fits = [&](std::size_t j) {
    for (std::size_t l = 0; l < m; ++l)
      if (model.activities[j].required[l] > free_units[l]) return false;
    return true;
  };
  auto parents_done = [&](std::size_t j) {
    for (int parent : model.activities[j].parents)
      if (status[parent] != Status::Done) return false;
    return true;
  };

  for (const auto& [j, elapsed] : in_progress) {
    if (j < 0 || static_cast<std::size_t>(j) >= n) throw InvalidParameter("simulation: in-progress id out of range");
    if (status[j] != Status::Pending) throw InvalidParameter("simulation: in-progress activity is already completed");
    if (!parents_done(j)) throw InvalidParameter("simulation: in-progress activity has incomplete parents");
    if (!fits(j)) throw InvalidParameter("simulation: in-progress activities exceed resource availability");
    claim(j, 0, ticks_for(std::max(durations[j] - std::max(elapsed, 0.0), 0.0), tick));
  }

  std::int64_t now = 0;
  while (true) {
    for (std::size_t j = 0; j < n; ++j) {
      if (status[j] == Status::Running && end_tick[j] <= now) {
        status[j] = Status::Done;
        ++done;
        trace.completions[j] = static_cast<double>(now) * tick;
        for (std::size_t l = 0; l < m; ++l) free_units[l] += model.activities[j].required[l];
      }
    }
    if (done == n) break;

    for (std::size_t j = 0; j < n; ++j)
      if (status[j] == Status::Pending && parents_done(j) && fits(j)) claim(j, now, duration_ticks[j]);

    TickSpan span;
    span.begin = now;
    span.end = std::numeric_limits<std::int64_t>::max();
    for (std::size_t j = 0; j < n; ++j) {
      if (status[j] == Status::Running) {
        span.active.push_back(static_cast<int>(j));
        span.end = std::min(span.end, end_tick[j]);
      }
    }
    if (span.active.empty()) {
      std::ostringstream os;
      os << "simulation: deadlock at tick " << now << "; blocked activities:";
      for (std::size_t j = 0; j < n; ++j)
        if (status[j] == Status::Pending) os << ' ' << j;
      throw DeadlockError(os.str());
    }
    for (std::size_t l = 0; l < m; ++l)
      if (free_units[l] < model.availability[l]) span.used.push_back(static_cast<int>(l));
    now = span.end;
    trace.spans.push_back(std::move(span));
  }
  trace.total_time = static_cast<double>(now) * tick;
  return trace;
}

}  // namespace

SimulationTrace run_simulation(const ProcessModel& model, std::uint64_t seed, const SimOptions& options) {
  return execute(model, {}, seed, options, {});
}

SimulationTrace resume_simulation(const ProcessModel& model, const ActivitySet& completed, std::uint64_t seed,
                                  const SimOptions& options, const std::map<int, double>& in_progress) {
  return execute(model, completed, seed, options, in_progress);
}

std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(master, {i});
  return seeds;
}

std::vector<SimulationTrace> run_ensemble(const ProcessModel& model, std::span<const std::uint64_t> seeds,
                                          const SimOptions& options, unsigned workers) {
  if (seeds.empty()) throw InvalidParameter("run_ensemble: seed list is empty");
  std::vector<SimulationTrace> traces(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    try {
      traces[i] = run_simulation(model, seeds[i], options);
    } catch (const DeadlockError& e) {
      throw DeadlockError(std::string(e.what()) + " [seed " + std::to_string(seeds[i]) + "]");
    } catch (const InvalidParameter& e) {
      throw InvalidParameter(std::string(e.what()) + " [seed " + std::to_string(seeds[i]) + "]");
    }
  });
  return traces;
}

}  // namespace ttm
