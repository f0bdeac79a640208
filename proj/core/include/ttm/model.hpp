#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ttm/random.hpp"

namespace ttm {

// Sorted, duplicate-free list of activity ids.
using ActivitySet = std::vector<int>;

struct Activity {
  int id = 0;
  std::vector<int> parents;   // sorted ascending, every entry < id
  std::vector<int> required;  // units of each resource, length m
  double t_min = 1.0;
  double t_exp = 1.0;
  double t_max = 1.0;

  bool operator==(const Activity&) const = default;
};

// A process: activities in topological id order plus the total units
// available of each resource.
struct ProcessModel {
  std::vector<Activity> activities;
  std::vector<int> availability;

  std::size_t n() const noexcept { return activities.size(); }
  std::size_t m() const noexcept { return availability.size(); }

  bool operator==(const ProcessModel&) const = default;
};

// Strictly lower-triangular dependency matrix; lower[i][j] == 1 means j is
// a parent of i. Row i has i entries.
struct DagAdjacency {
  std::size_t n = 0;
  std::vector<std::vector<std::uint8_t>> lower;

  std::size_t edge_count() const;
};

// edges[j][l] == 1 means activity j uses resource l.
struct BipartiteMap {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::vector<std::uint8_t>> edges;

  std::size_t edge_count() const;
};

struct EnsembleParams {
  std::size_t n = 20;
  std::size_t m = 10;
  double p = 0.4;
  double q = 0.4;
  int requirement_min = 1;
  int requirement_max = 20;
  double duration_mean_min = 1.0;
  double duration_mean_max = 200.0;
  double t_min = 1.0;
  double t_max = 200.0;
  std::uint64_t seed = 0;
  // Per-resource availability overrides; unset entries use the default
  // policy (max mapped requirement, or 1 for unmapped resources).
  std::vector<std::optional<int>> availability_override;

  void validate() const;
};

// Random DAG in the style of an Erdos-Renyi ensemble restricted to the lower
// triangle. Orphan rows (i > 0) receive one uniformly chosen parent. One
// parent candidate is drawn for every row i > 0 whether or not it is used,
// so the stream consumption is independent of the edge outcomes.
DagAdjacency generate_random_dag(std::size_t n, double p, Rng& rng);

BipartiteMap generate_random_bipartite(std::size_t n, std::size_t m, double q, Rng& rng);

ProcessModel assemble_model(const DagAdjacency& dag, const BipartiteMap& map,
                            const EnsembleParams& params, Rng& rng);

// Convenience: dag, map and model drawn from one stream seeded with params.seed.
ProcessModel generate_model(const EnsembleParams& params);

// Every transitive predecessor of `targets`, excluding the targets themselves.
ActivitySet ancestor_closure(const ProcessModel& model, const ActivitySet& targets);

struct Violation {
  std::string invariant;
  std::vector<int> where;  // offending indices, e.g. {activity} or {activity, resource}

  bool operator==(const Violation&) const = default;
};

// Empty iff the model is well formed.
std::vector<Violation> validate_model(const ProcessModel& model);

std::string describe(const Violation& v);

}  // namespace ttm
