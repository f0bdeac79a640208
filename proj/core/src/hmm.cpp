#include "ttm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>

#include "ttm/errors.hpp"

namespace ttm {

namespace {

constexpr double kRowTolerance = 1e-9;

std::string format_label(const ActivitySet& label) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < label.size(); ++i) os << (i ? "," : "") << label[i];
  os << '}';
  return os.str();
}

}  // namespace

ObservationSymbol ObservationSymbol::from_resources(std::size_t m, std::span<const int> resources) {
  ObservationSymbol symbol;
  symbol.present.assign(m, 0);
  for (int r : resources) {
    if (r < 0 || static_cast<std::size_t>(r) >= m)
      throw InvalidParameter("observation: resource id " + std::to_string(r) + " out of range");
    symbol.present[r] = 1;
  }
  return symbol;
}

std::vector<int> ObservationSymbol::resources() const {
  std::vector<int> out;
  for (std::size_t l = 0; l < present.size(); ++l)
    if (present[l]) out.push_back(static_cast<int>(l));
  return out;
}

// ---------------------------------------------------------------------------
// Hmm

Hmm Hmm::from_parts(std::vector<ActivitySet> labels, std::vector<double> initial,
                    const std::vector<std::vector<double>>& transition,
                    std::vector<std::vector<double>> emission) {
  const std::size_t k = labels.size();
  if (k == 0) throw InvalidParameter("hmm: at least one state is required");
  if (initial.size() != k || transition.size() != k || emission.size() != k)
    throw InvalidParameter("hmm: initial, transition and emission must have one entry per state");

  Hmm hmm;
  hmm.resources_ = emission.front().size();
  hmm.states_.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::is_sorted(labels[i].begin(), labels[i].end()) ||
        std::adjacent_find(labels[i].begin(), labels[i].end()) != labels[i].end())
      throw InvalidParameter("hmm: state labels must be sorted and duplicate-free");
    if (!hmm.index_.emplace(labels[i], i).second)
      throw InvalidParameter("hmm: duplicate state label " + format_label(labels[i]));
    hmm.states_.push_back({std::move(labels[i]), i});
  }

  double initial_sum = 0.0;
  for (double p : initial) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("hmm: initial probabilities must lie in [0, 1]");
    initial_sum += p;
  }
  if (std::abs(initial_sum - 1.0) > kRowTolerance) throw InvalidParameter("hmm: initial distribution does not sum to 1");
  hmm.initial_ = std::move(initial);

  hmm.arcs_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (transition[i].size() != k) throw InvalidParameter("hmm: transition matrix must be square");
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = transition[i][j];
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("hmm: transition probabilities must lie in [0, 1]");
      row += p;
      if (p > 0.0) hmm.arcs_[i].push_back({j, p, std::log(p)});
    }
    if (std::abs(row - 1.0) > kRowTolerance)
      throw InvalidParameter("hmm: transition row " + std::to_string(i) + " does not sum to 1");
  }

  hmm.log_on_.resize(k);
  hmm.log_off_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (emission[i].size() != hmm.resources_) throw InvalidParameter("hmm: emission rows must all have length m");
    hmm.log_on_[i].resize(hmm.resources_);
    hmm.log_off_[i].resize(hmm.resources_);
    for (std::size_t l = 0; l < hmm.resources_; ++l) {
      const double e = emission[i][l];
      if (!(e >= 0.0 && e <= 1.0)) throw InvalidParameter("hmm: emission probabilities must lie in [0, 1]");
      hmm.log_on_[i][l] = e > 0.0 ? std::log(e) : kNegInf;
      hmm.log_off_[i][l] = e < 1.0 ? std::log1p(-e) : kNegInf;
    }
  }
  hmm.emission_ = std::move(emission);
  return hmm;
}

std::optional<std::size_t> Hmm::find(const ActivitySet& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Hmm::transition(std::size_t from, std::size_t to) const {
  for (const Arc& arc : arcs_.at(from))
    if (arc.to == to) return arc.prob;
  return 0.0;
}

std::vector<std::vector<double>> Hmm::dense_transition() const {
  std::vector<std::vector<double>> dense(state_count(), std::vector<double>(state_count(), 0.0));
  for (std::size_t i = 0; i < state_count(); ++i)
    for (const Arc& arc : arcs_[i]) dense[i][arc.to] = arc.prob;
  return dense;
}

double Hmm::log_emission(std::size_t state, const ObservationSymbol& symbol) const {
  if (symbol.present.size() != resources_)
    throw InvalidParameter("hmm: observation symbol has length " + std::to_string(symbol.present.size()) +
                           ", expected " + std::to_string(resources_));
  const auto& on = log_on_[state];
  const auto& off = log_off_[state];
  double total = 0.0;
  for (std::size_t l = 0; l < resources_; ++l) total += symbol.present[l] ? on[l] : off[l];
  return total;
}

std::vector<std::size_t> Hmm::state_order() const {
  std::vector<std::size_t> order(state_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

std::optional<std::vector<std::size_t>> Hmm::topological_state_order() const {
  const std::size_t k = state_count();
  std::vector<std::size_t> indegree(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (const Arc& arc : arcs_[i])
      if (arc.to != i) ++indegree[arc.to];

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < k; ++i)
    if (indegree[i] == 0) ready.push(i);

  std::vector<std::size_t> order;
  order.reserve(k);
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (const Arc& arc : arcs_[i])
      if (arc.to != i && --indegree[arc.to] == 0) ready.push(arc.to);
  }
  if (order.size() != k) return std::nullopt;
  return order;
}

bool Hmm::operator==(const Hmm& other) const {
  return states_ == other.states_ && initial_ == other.initial_ && emission_ == other.emission_ &&
         resources_ == other.resources_ && dense_transition() == other.dense_transition();
}

// ---------------------------------------------------------------------------
// Construction from traces

std::vector<ActivitySet> extract_state_sequence(const SimulationTrace& trace) {
  std::vector<ActivitySet> labels;
  labels.reserve(static_cast<std::size_t>(trace.tick_count()) + 1);
  for (const TickSpan& span : trace.spans)
    for (std::int64_t t = span.begin; t < span.end; ++t) labels.push_back(span.active);
  labels.emplace_back();
  return labels;
}

std::vector<double> emission_vector(const ProcessModel& model, const ActivitySet& label,
                                    std::span<const double> activity_obs_prob) {
  if (activity_obs_prob.size() != model.n())
    throw InvalidParameter("emission_vector: need one observation probability per activity");
  std::vector<double> e(model.m(), 0.0);
  for (int j : label) {
    if (j < 0 || static_cast<std::size_t>(j) >= model.n())
      throw InvalidParameter("emission_vector: activity id out of range");
    const auto& required = model.activities[j].required;
    for (std::size_t l = 0; l < model.m(); ++l)
      if (required[l] > 0) e[l] = std::max(e[l], activity_obs_prob[j]);
  }
  return e;
}

std::size_t HmmBuilder::intern(const ActivitySet& label, std::int64_t tick) {
  auto [it, inserted] = ids_.emplace(label, labels_.size());
  if (inserted) {
    labels_.push_back(label);
    first_tick_.push_back(tick);
    initial_.push_back(0);
  } else {
    first_tick_[it->second] = std::min(first_tick_[it->second], tick);
  }
  return it->second;
}

void HmmBuilder::count(std::size_t from, std::size_t to, std::uint64_t times) {
  if (times > 0) counts_[{from, to}] += times;
}

void HmmBuilder::add(const SimulationTrace& trace) {
  ++traces_;
  const std::size_t terminal = intern({}, trace.tick_count());
  if (trace.spans.empty()) {
    ++initial_[terminal];
    return;
  }
  std::size_t previous = intern(trace.spans.front().active, trace.spans.front().begin);
  ++initial_[previous];
  count(previous, previous, static_cast<std::uint64_t>(trace.spans.front().end - trace.spans.front().begin - 1));
  for (std::size_t k = 1; k < trace.spans.size(); ++k) {
    const TickSpan& span = trace.spans[k];
    const std::size_t current = intern(span.active, span.begin);
    count(previous, current, 1);
    count(current, current, static_cast<std::uint64_t>(span.end - span.begin - 1));
    previous = current;
  }
  count(previous, terminal, 1);
}

void HmmBuilder::add_sequence(std::span<const ActivitySet> labels) {
  if (labels.empty()) throw InvalidParameter("hmm builder: label sequence is empty");
  ++traces_;
  std::size_t previous = intern(labels.front(), 0);
  ++initial_[previous];
  for (std::size_t t = 1; t < labels.size(); ++t) {
    const std::size_t current = intern(labels[t], static_cast<std::int64_t>(t));
    if (!labels[t - 1].empty()) count(previous, current, 1);
    previous = current;
  }
}

void HmmBuilder::merge(const HmmBuilder& other) {
  std::vector<std::size_t> remap(other.labels_.size());
  for (std::size_t i = 0; i < other.labels_.size(); ++i) {
    remap[i] = intern(other.labels_[i], other.first_tick_[i]);
    initial_[remap[i]] += other.initial_[i];
  }
  for (const auto& [edge, times] : other.counts_) count(remap[edge.first], remap[edge.second], times);
  traces_ += other.traces_;
}

Hmm HmmBuilder::build(const ProcessModel& model, std::span<const double> activity_obs_prob,
                      const HmmBuildOptions& options) const {
  if (traces_ == 0) throw InvalidParameter("hmm builder: no traces ingested");
  for (double p : activity_obs_prob)
    if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("hmm builder: observation probabilities must lie in (0, 1]");

  const std::size_t k_raw = labels_.size();
  std::vector<std::uint64_t> outgoing(k_raw, 0);
  for (const auto& [edge, times] : counts_)
    if (!labels_[edge.first].empty()) outgoing[edge.first] += times;

  std::vector<std::string> under;
  for (std::size_t i = 0; i < k_raw; ++i)
    if (!labels_[i].empty() && outgoing[i] < options.min_outgoing) under.push_back(format_label(labels_[i]));
  if (!under.empty()) {
    std::ostringstream os;
    os << "hmm builder: " << under.size() << " under-sampled state(s) without enough outgoing transitions:";
    for (const auto& s : under) os << ' ' << s;
    throw UnderSampledError(os.str());
  }

  std::vector<std::size_t> order(k_raw);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ta = labels_[a].empty();
    const bool tb = labels_[b].empty();
    return std::tie(ta, first_tick_[a], labels_[a]) < std::tie(tb, first_tick_[b], labels_[b]);
  });
  std::vector<std::size_t> position(k_raw);
  for (std::size_t i = 0; i < k_raw; ++i) position[order[i]] = i;

  std::vector<ActivitySet> labels(k_raw);
  std::vector<double> initial(k_raw, 0.0);
  std::vector<std::vector<double>> transition(k_raw, std::vector<double>(k_raw, 0.0));
  std::vector<std::vector<double>> emission(k_raw);
  for (std::size_t i = 0; i < k_raw; ++i) {
    const std::size_t at = position[i];
    labels[at] = labels_[i];
    initial[at] = static_cast<double>(initial_[i]) / static_cast<double>(traces_);
    emission[at] = emission_vector(model, labels_[i], activity_obs_prob);
    if (labels_[i].empty()) transition[at][at] = 1.0;
  }
  for (const auto& [edge, times] : counts_) {
    if (labels_[edge.first].empty()) continue;
    transition[position[edge.first]][position[edge.second]] =
        static_cast<double>(times) / static_cast<double>(outgoing[edge.first]);
  }
  return Hmm::from_parts(std::move(labels), std::move(initial), transition, std::move(emission));
}

Hmm build_hmm(std::span<const SimulationTrace> traces, const ProcessModel& model, double obs_prob,
              const HmmBuildOptions& options) {
  if (traces.empty()) throw InvalidParameter("build_hmm: trace list is empty");
  HmmBuilder builder;
  for (const auto& trace : traces) builder.add(trace);
  const std::vector<double> per_activity(model.n(), obs_prob);
  return builder.build(model, per_activity, options);
}

// ---------------------------------------------------------------------------
// Emission

double emission_probability(const Hmm& hmm, std::size_t state, const ObservationSymbol& symbol) {
  if (symbol.present.size() != hmm.resource_count())
    throw InvalidParameter("emission_probability: symbol has the wrong length");
  const auto e = hmm.emission(state);
  double p = 1.0;
  for (std::size_t l = 0; l < e.size(); ++l) p *= symbol.present[l] ? e[l] : 1.0 - e[l];
  return p;
}

ObservationSymbol sample_observation(std::span<const double> emission, Rng& rng) {
  ObservationSymbol symbol;
  symbol.present.assign(emission.size(), 0);
  for (std::size_t l = 0; l < emission.size(); ++l)
    symbol.present[l] = uniform01(rng) < emission[l] ? 1 : 0;
  return symbol;
}

ObservationSymbol sample_observation(const Hmm& hmm, std::size_t state, Rng& rng) {
  if (state >= hmm.state_count()) throw InvalidParameter("sample_observation: state out of range");
  return sample_observation(hmm.emission(state), rng);
}

// ---------------------------------------------------------------------------
// Decoding

double forward(const Hmm& hmm, const ObservationSequence& obs) {
  if (obs.empty()) throw InvalidParameter("forward: observation sequence is empty");
  const std::size_t k = hmm.state_count();
  std::vector<double> alpha(k, 0.0);
  std::vector<double> next(k, 0.0);
  double log_likelihood = 0.0;

  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (t == 0) {
      for (std::size_t s = 0; s < k; ++s) next[s] = hmm.initial()[s];
    } else {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < k; ++s) {
        if (alpha[s] == 0.0) continue;
        for (const auto& arc : hmm.successors(s)) next[arc.to] += alpha[s] * arc.prob;
      }
    }
    double scale = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      if (next[s] == 0.0) continue;
      next[s] *= std::exp(hmm.log_emission(s, obs[t]));
      scale += next[s];
    }
    if (!(scale > 0.0)) return kNegInf;
    for (std::size_t s = 0; s < k; ++s) alpha[s] = next[s] / scale;
    log_likelihood += std::log(scale);
  }
  return log_likelihood;
}

ViterbiDecoder::ViterbiDecoder(const Hmm& hmm)
    : hmm_(&hmm), score_(hmm.state_count(), kNegInf), next_(hmm.state_count(), kNegInf) {}

void ViterbiDecoder::step(const ObservationSymbol& symbol) {
  const std::size_t k = hmm_->state_count();
  const std::size_t t = backpointers_.size();
  backpointers_.emplace_back();
  if (failed_at_) return;

  auto& back = backpointers_.back();
  if (t == 0) {
    for (std::size_t s = 0; s < k; ++s) {
      const double p = hmm_->initial()[s];
      next_[s] = p > 0.0 ? std::log(p) : kNegInf;
    }
  } else {
    back.assign(k, 0);
    std::fill(next_.begin(), next_.end(), kNegInf);
    for (std::size_t s = 0; s < k; ++s) {
      if (score_[s] == kNegInf) continue;
      for (const auto& arc : hmm_->successors(s)) {
        const double candidate = score_[s] + arc.log_prob;
        if (candidate > next_[arc.to]) {
          next_[arc.to] = candidate;
          back[arc.to] = static_cast<std::uint32_t>(s);
        }
      }
    }
  }

  bool any = false;
  for (std::size_t s = 0; s < k; ++s) {
    if (next_[s] == kNegInf) continue;
    next_[s] += hmm_->log_emission(s, symbol);
    if (next_[s] != kNegInf) any = true;
  }
  if (!any) {
    failed_at_ = t;
    return;
  }
  std::swap(score_, next_);
}

std::size_t ViterbiDecoder::best_final() const {
  if (backpointers_.empty() || failed_at_) throw DecodeError("viterbi: no viable path");
  std::size_t best = 0;
  for (std::size_t s = 1; s < score_.size(); ++s)
    if (score_[s] > score_[best]) best = s;
  return best;
}

double ViterbiDecoder::best_log_prob() const {
  if (backpointers_.empty() || failed_at_) return kNegInf;
  return score_[best_final()];
}

std::vector<std::size_t> ViterbiDecoder::backtrack() const {
  std::vector<std::size_t> path(backpointers_.size());
  std::size_t s = best_final();
  for (std::size_t t = path.size(); t-- > 0;) {
    path[t] = s;
    if (t > 0) s = backpointers_[t][s];
  }
  return path;
}

ViterbiResult viterbi(const Hmm& hmm, const ObservationSequence& obs) {
  if (obs.empty()) throw InvalidParameter("viterbi: observation sequence is empty");
  ViterbiDecoder decoder(hmm);
  for (const auto& symbol : obs) {
    decoder.step(symbol);
    if (!decoder.viable()) break;
  }
  ViterbiResult result;
  if (!decoder.viable()) {
    result.failed_at = decoder.failed_at();
    return result;
  }
  result.path = decoder.backtrack();
  result.log_prob = decoder.best_log_prob();
  return result;
}

}  // namespace ttm
