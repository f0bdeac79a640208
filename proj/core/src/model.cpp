#include "ttm/model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "ttm/errors.hpp"

namespace ttm {

std::size_t DagAdjacency::edge_count() const {
  std::size_t count = 0;
  for (const auto& row : lower) count += static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
  return count;
}

std::size_t BipartiteMap::edge_count() const {
  std::size_t count = 0;
  for (const auto& row : edges) count += static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
  return count;
}

void EnsembleParams::validate() const {
  if (n == 0) throw InvalidParameter("ensemble: n must be at least 1");
  if (m == 0) throw InvalidParameter("ensemble: m must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("ensemble: p must lie in [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("ensemble: q must lie in [0, 1]");
  if (requirement_min < 0 || requirement_min > requirement_max)
    throw InvalidParameter("ensemble: requirement range must be a non-empty interval of non-negative integers");
  if (!(duration_mean_min <= duration_mean_max))
    throw InvalidParameter("ensemble: duration mean range is empty");
  if (!(t_min > 0.0)) throw InvalidParameter("ensemble: t_min must be positive");
  if (!(t_min <= duration_mean_min && duration_mean_max <= t_max))
    throw InvalidParameter("ensemble: duration mean range must lie within [t_min, t_max]");
  if (availability_override.size() > m)
    throw InvalidParameter("ensemble: more availability overrides than resources");
  for (const auto& o : availability_override)
    if (o && *o <= 0) throw InvalidParameter("ensemble: availability overrides must be positive");
}

DagAdjacency generate_random_dag(std::size_t n, double p, Rng& rng) {
  if (n == 0) throw InvalidParameter("generate_random_dag: n must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("generate_random_dag: p must lie in [0, 1]");

  DagAdjacency dag;
  dag.n = n;
  dag.lower.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = dag.lower[i];
    row.assign(i, 0);
    for (std::size_t j = 0; j < i; ++j) {
      if (uniform01(rng) < p) row[j] = 1;
    }
    if (i > 0) {
      const auto parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      if (std::find(row.begin(), row.end(), 1) == row.end()) row[parent] = 1;
    }
  }
  return dag;
}

BipartiteMap generate_random_bipartite(std::size_t n, std::size_t m, double q, Rng& rng) {
  if (n == 0 || m == 0) throw InvalidParameter("generate_random_bipartite: n and m must be at least 1");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("generate_random_bipartite: q must lie in [0, 1]");

  BipartiteMap map;
  map.n = n;
  map.m = m;
  map.edges.assign(n, std::vector<std::uint8_t>(m, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < m; ++l) {
      if (uniform01(rng) < q) map.edges[i][l] = 1;
    }
  }
  return map;
}

ProcessModel assemble_model(const DagAdjacency& dag, const BipartiteMap& map,
                            const EnsembleParams& params, Rng& rng) {
  params.validate();
  if (dag.n != params.n || map.n != params.n || map.m != params.m || dag.lower.size() != dag.n ||
      map.edges.size() != map.n)
    throw InvalidParameter("assemble_model: dimensions of dag, map and params disagree");

  const std::size_t n = params.n;
  const std::size_t m = params.m;
  std::uniform_int_distribution<int> requirement(params.requirement_min, params.requirement_max);

  ProcessModel model;
  model.activities.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Activity& a = model.activities[j];
    a.id = static_cast<int>(j);
    if (dag.lower[j].size() != j) throw InvalidParameter("assemble_model: dag row has the wrong length");
    for (std::size_t k = 0; k < j; ++k)
      if (dag.lower[j][k]) a.parents.push_back(static_cast<int>(k));

    if (map.edges[j].size() != m) throw InvalidParameter("assemble_model: map row has the wrong length");
    a.required.assign(m, 0);
    for (std::size_t l = 0; l < m; ++l)
      if (map.edges[j][l]) a.required[l] = requirement(rng);

    const double u = uniform01(rng);
    a.t_exp = params.duration_mean_min + u * (params.duration_mean_max - params.duration_mean_min);
    a.t_exp = std::clamp(a.t_exp, params.duration_mean_min, params.duration_mean_max);
    a.t_min = params.t_min;
    a.t_max = params.t_max;
  }

  model.availability.assign(m, 0);
  for (std::size_t l = 0; l < m; ++l) {
    int peak = 0;
    for (const auto& a : model.activities) peak = std::max(peak, a.required[l]);
    model.availability[l] = peak > 0 ? peak : 1;
    if (l < params.availability_override.size() && params.availability_override[l])
      model.availability[l] = *params.availability_override[l];
  }
  return model;
}

ProcessModel generate_model(const EnsembleParams& params) {
  params.validate();
  Rng rng(params.seed);
  const auto dag = generate_random_dag(params.n, params.p, rng);
  const auto map = generate_random_bipartite(params.n, params.m, params.q, rng);
  return assemble_model(dag, map, params, rng);
}

ActivitySet ancestor_closure(const ProcessModel& model, const ActivitySet& targets) {
  const std::size_t n = model.n();
  std::vector<std::uint8_t> is_target(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<int> stack;
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= n)
      throw InvalidParameter("ancestor_closure: activity id " + std::to_string(t) + " out of range");
    is_target[t] = 1;
    stack.push_back(t);
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int parent : model.activities[v].parents) {
      if (parent < 0 || static_cast<std::size_t>(parent) >= n)
        throw InvalidParameter("ancestor_closure: parent id out of range");
      if (!seen[parent]) {
        seen[parent] = 1;
        stack.push_back(parent);
      }
    }
  }
  ActivitySet out;
  for (std::size_t j = 0; j < n; ++j)
    if (seen[j] && !is_target[j]) out.push_back(static_cast<int>(j));
  return out;
}

std::vector<Violation> validate_model(const ProcessModel& model) {
  std::vector<Violation> out;
  const std::size_t n = model.n();
  const std::size_t m = model.m();

  if (n == 0) out.push_back({"no-activities", {}});
  for (std::size_t l = 0; l < m; ++l)
    if (model.availability[l] <= 0) out.push_back({"availability-positive", {static_cast<int>(l)}});

  bool has_root = false;
  for (std::size_t j = 0; j < n; ++j) {
    const Activity& a = model.activities[j];
    const int id = static_cast<int>(j);
    if (a.id != id) out.push_back({"activity-id", {id}});
    if (a.parents.empty()) has_root = true;

    bool parents_ok = true;
    for (std::size_t k = 0; k < a.parents.size(); ++k) {
      const int parent = a.parents[k];
      if (parent < 0 || parent >= id || (k > 0 && a.parents[k - 1] >= parent)) parents_ok = false;
    }
    if (!parents_ok) out.push_back({"parent-order", {id}});

    if (!(a.t_min > 0.0)) out.push_back({"duration-positive", {id}});
    if (!(a.t_min <= a.t_exp && a.t_exp <= a.t_max)) out.push_back({"duration-order", {id}});

    if (a.required.size() != m) {
      out.push_back({"required-length", {id}});
      continue;
    }
    for (std::size_t l = 0; l < m; ++l) {
      if (a.required[l] < 0)
        out.push_back({"required-nonnegative", {id, static_cast<int>(l)}});
      else if (a.required[l] > model.availability[l])
        out.push_back({"required-exceeds-availability", {id, static_cast<int>(l)}});
    }
  }
  if (n > 0 && !has_root) out.push_back({"no-root", {}});
  return out;
}

std::string describe(const Violation& v) {
  std::ostringstream os;
  os << v.invariant;
  if (!v.where.empty()) {
    os << " at (";
    for (std::size_t i = 0; i < v.where.size(); ++i) os << (i ? "," : "") << v.where[i];
    os << ")";
  }
  return os.str();
}

}  // namespace ttm
