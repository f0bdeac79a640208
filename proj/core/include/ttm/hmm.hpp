#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ttm/model.hpp"
#include "ttm/random.hpp"
#include "ttm/simulation.hpp"

namespace ttm {

struct HiddenState {
  ActivitySet label;  // empty label = terminal state
  std::size_t index = 0;

  bool operator==(const HiddenState&) const = default;
};

// Resources observed during one tick, as a 0/1 vector of length m.
struct ObservationSymbol {
  std::vector<std::uint8_t> present;

  static ObservationSymbol from_resources(std::size_t m, std::span<const int> resources);
  std::vector<int> resources() const;

  bool operator==(const ObservationSymbol&) const = default;
};

using ObservationSequence = std::vector<ObservationSymbol>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Hidden Markov model over active-activity sets with a factored Bernoulli
// emission model: in state s resource l is observed independently with
// probability emission(s)[l].
class Hmm {
 public:
  struct Arc {
    std::size_t to = 0;
    double prob = 0.0;
    double log_prob = 0.0;
  };

  Hmm() = default;

  // Checks shapes, row sums (1e-9), label uniqueness and probability ranges.
  static Hmm from_parts(std::vector<ActivitySet> labels, std::vector<double> initial,
                        const std::vector<std::vector<double>>& transition,
                        std::vector<std::vector<double>> emission);

  std::size_t state_count() const noexcept { return states_.size(); }
  std::size_t resource_count() const noexcept { return resources_; }
  const std::vector<HiddenState>& states() const noexcept { return states_; }
  const HiddenState& state(std::size_t i) const { return states_.at(i); }
  std::optional<std::size_t> find(const ActivitySet& label) const;
  std::optional<std::size_t> terminal() const { return find({}); }

  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<Arc>& successors(std::size_t i) const { return arcs_.at(i); }
  double transition(std::size_t from, std::size_t to) const;
  std::vector<std::vector<double>> dense_transition() const;
  std::span<const double> emission(std::size_t i) const { return emission_.at(i); }

  // log P(symbol | state); kNegInf when impossible.
  double log_emission(std::size_t state, const ObservationSymbol& symbol) const;

  // States are indexed by earliest first occurrence in the training
  // ensemble (then label), terminal last; this is that order.
  std::vector<std::size_t> state_order() const;

  // An ordering in which no transition other than a self loop goes to an
  // earlier state, if the transition graph admits one.
  std::optional<std::vector<std::size_t>> topological_state_order() const;

  bool operator==(const Hmm& other) const;

 private:
  std::vector<HiddenState> states_;
  std::map<ActivitySet, std::size_t> index_;
  std::vector<double> initial_;
  std::vector<std::vector<Arc>> arcs_;
  std::vector<std::vector<double>> emission_;
  std::vector<std::vector<double>> log_on_;
  std::vector<std::vector<double>> log_off_;
  std::size_t resources_ = 0;
};

// One label per tick followed by the terminal (empty) label.
std::vector<ActivitySet> extract_state_sequence(const SimulationTrace& trace);

// Per-resource observation probability of a state: for resource l the
// maximum observation probability over activities in the label that
// require l, zero if none does.
std::vector<double> emission_vector(const ProcessModel& model, const ActivitySet& label,
                                    std::span<const double> activity_obs_prob);

struct HmmBuildOptions {
  // Non-terminal states with fewer outgoing observations than this are
  // reported as under-sampled.
  std::uint64_t min_outgoing = 1;
};

// Accumulates transition counts from traces. Merging is associative and
// commutative, so partial builders may be filled independently.
class HmmBuilder {
 public:
  void add(const SimulationTrace& trace);
  void add_sequence(std::span<const ActivitySet> labels);
  void merge(const HmmBuilder& other);

  std::size_t state_count() const noexcept { return labels_.size(); }
  std::size_t trace_count() const noexcept { return traces_; }

  // Throws UnderSampledError listing the offending labels.
  Hmm build(const ProcessModel& model, std::span<const double> activity_obs_prob,
            const HmmBuildOptions& options = {}) const;

 private:
  std::size_t intern(const ActivitySet& label, std::int64_t tick);
  void count(std::size_t from, std::size_t to, std::uint64_t times);

  std::map<ActivitySet, std::size_t> ids_;
  std::vector<ActivitySet> labels_;
  std::vector<std::int64_t> first_tick_;
  std::vector<std::uint64_t> initial_;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> counts_;
  std::size_t traces_ = 0;
};

Hmm build_hmm(std::span<const SimulationTrace> traces, const ProcessModel& model, double obs_prob,
              const HmmBuildOptions& options = {});

// Product over resources of e_l or (1 - e_l).
double emission_probability(const Hmm& hmm, std::size_t state, const ObservationSymbol& symbol);

ObservationSymbol sample_observation(const Hmm& hmm, std::size_t state, Rng& rng);
ObservationSymbol sample_observation(std::span<const double> emission, Rng& rng);

// log P(obs | hmm); kNegInf when the sequence is impossible.
double forward(const Hmm& hmm, const ObservationSequence& obs);

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_prob = kNegInf;
  // Set when every path has probability zero: the first position at which
  // no state remains reachable.
  std::optional<std::size_t> failed_at;

  bool viable() const noexcept { return !failed_at.has_value(); }
};

// Incremental max-product decoder. After k calls to step(), best_final()
// is the last state of the Viterbi path for the first k symbols.
class ViterbiDecoder {
 public:
  explicit ViterbiDecoder(const Hmm& hmm);

  void step(const ObservationSymbol& symbol);
  std::size_t length() const noexcept { return backpointers_.size(); }
  bool viable() const noexcept { return !failed_at_.has_value(); }
  std::optional<std::size_t> failed_at() const noexcept { return failed_at_; }

  // Lowest-index state attaining the maximum score.
  std::size_t best_final() const;
  double best_log_prob() const;
  std::vector<std::size_t> backtrack() const;

 private:
  const Hmm* hmm_;
  std::vector<double> score_;
  std::vector<double> next_;
  std::vector<std::vector<std::uint32_t>> backpointers_;
  std::optional<std::size_t> failed_at_;
};

ViterbiResult viterbi(const Hmm& hmm, const ObservationSequence& obs);

}  // namespace ttm
