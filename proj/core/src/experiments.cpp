#include "ttm/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "ttm/errors.hpp"
#include "ttm/parallel.hpp"

namespace ttm {

void SweepConfig::validate() const {
  if (n == 0) throw InvalidParameter("sweep: n must be at least 1");
  if (m_values.empty() || p_values.empty() || q_values.empty())
    throw InvalidParameter("sweep: m, p and q value lists must be non-empty");
  for (auto m : m_values)
    if (m == 0) throw InvalidParameter("sweep: m values must be at least 1");
  for (double d : p_values)
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidParameter("sweep: p values must lie in [0, 1]");
  for (double d : q_values)
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidParameter("sweep: q values must lie in [0, 1]");
  if (samples < 2) throw InvalidParameter("sweep: at least two samples per cell are needed for a confidence band");
  if (sub_simulations == 0 || test_runs == 0 || max_length == 0)
    throw InvalidParameter("sweep: sub_simulations, test_runs and max_length must be at least 1");
  if (!(obs_prob > 0.0 && obs_prob <= 1.0)) throw InvalidParameter("sweep: obs_prob must lie in (0, 1]");
  if (!(tick > 0.0)) throw InvalidParameter("sweep: tick must be positive");
  if (!(confidence > 0.0 && confidence < 100.0)) throw InvalidParameter("sweep: confidence must lie in (0, 100)");
}

std::vector<std::size_t> SweepConfig::lengths() const {
  std::vector<std::size_t> out(max_length);
  std::iota(out.begin(), out.end(), std::size_t{1});
  return out;
}

double z_score(double confidence_percent) {
  if (!(confidence_percent > 0.0 && confidence_percent < 100.0))
    throw InvalidParameter("z_score: confidence must lie in (0, 100)");
  return std::sqrt(2.0) * boost::math::erf_inv(confidence_percent / 100.0);
}

Band confidence_band(std::span<const double> rates, double confidence_percent, SemDivisor divisor) {
  if (rates.size() < 2) throw InvalidParameter("confidence_band: variance is undefined for fewer than two samples");
  const double s = static_cast<double>(rates.size());
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  if (*lo == *hi) return {*lo, std::clamp(*lo, 0.0, 1.0), std::clamp(*lo, 0.0, 1.0)};
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / s;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  const double variance = ss / (s - 1.0);
  const double sem = std::sqrt(variance) / (divisor == SemDivisor::SqrtS ? std::sqrt(s) : s);
  const double half = z_score(confidence_percent) * sem;
  return {mean, std::clamp(mean - half, 0.0, 1.0), std::clamp(mean + half, 0.0, 1.0)};
}

CutoffSummary cutoff_statistics(const SuccessCurve& curve) {
  if (curve.mean.empty() || curve.mean.size() != curve.lengths.size())
    throw InvalidParameter("cutoff_statistics: curve is empty or malformed");
  CutoffSummary out;
  out.max_rate = *std::max_element(curve.mean.begin(), curve.mean.end());
  for (double threshold : kCutoffThresholds) {
    std::size_t at = 0;
    if (out.max_rate > 0.0) {
      const double target = threshold * out.max_rate;
      while (curve.mean[at] < target) ++at;
    }
    out.thresholds.push_back(threshold);
    out.required_lengths.push_back(curve.lengths[at]);
    out.achieved_rates.push_back(curve.mean[at]);
  }
  return out;
}

RunEvaluation evaluate_run(const ProcessModel& model, const Hmm& hmm, std::uint64_t seed,
                           std::span<const std::size_t> lengths, double obs_prob, const SimOptions& sim) {
  if (lengths.empty()) throw InvalidParameter("evaluate_run: no lengths requested");
  if (!std::is_sorted(lengths.begin(), lengths.end()) || lengths.front() == 0 ||
      std::adjacent_find(lengths.begin(), lengths.end()) != lengths.end())
    throw InvalidParameter("evaluate_run: lengths must be positive, ascending and unique");

  const SimulationTrace trace = run_simulation(model, seed, sim);
  const std::vector<double> per_activity(model.n(), obs_prob);
  Rng noise(derive_seed(seed, {0x0b5e}));

  RunEvaluation out;
  out.success.reserve(lengths.size());
  out.path_accuracy.reserve(lengths.size());
  out.truth.reserve(lengths.size());
  out.decoded.reserve(lengths.size());

  const ActivitySet terminal;
  std::vector<const ActivitySet*> truth_by_tick;
  ViterbiDecoder decoder(hmm);
  std::size_t span_index = 0;
  std::vector<double> emission;
  std::size_t emission_for = static_cast<std::size_t>(-1);
  std::size_t next = 0;

  for (std::size_t t = 0; t < lengths.back(); ++t) {
    const auto tick = static_cast<std::int64_t>(t);
    while (span_index < trace.spans.size() && trace.spans[span_index].end <= tick) ++span_index;
    const bool running = span_index < trace.spans.size();
    const ActivitySet& truth = running ? trace.spans[span_index].active : terminal;
    const std::size_t key = running ? span_index : trace.spans.size();
    if (key != emission_for) {
      emission = emission_vector(model, truth, per_activity);
      emission_for = key;
    }
    truth_by_tick.push_back(&truth);
    decoder.step(sample_observation(emission, noise));

    if (t + 1 != lengths[next]) continue;
    ++next;
    out.truth.push_back(truth);
    if (!decoder.viable()) {
      out.success.push_back(0);
      out.path_accuracy.push_back(0.0);
      out.decoded.emplace_back(std::nullopt);
      continue;
    }
    const auto path = decoder.backtrack();
    const ActivitySet& final_label = hmm.state(path.back()).label;
    out.success.push_back(final_label == truth ? 1 : 0);
    out.decoded.emplace_back(final_label);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < path.size(); ++k)
      if (hmm.state(path[k]).label == *truth_by_tick[k]) ++correct;
    out.path_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(path.size()));
  }
  return out;
}

std::vector<double> SampleEvaluation::success_rate() const {
  if (runs.empty()) return {};
  std::vector<double> rate(runs.front().success.size(), 0.0);
  for (const auto& run : runs)
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] += run.success[i];
  for (double& r : rate) r /= static_cast<double>(runs.size());
  return rate;
}

std::vector<double> SampleEvaluation::path_accuracy() const {
  if (runs.empty()) return {};
  std::vector<double> rate(runs.front().path_accuracy.size(), 0.0);
  for (const auto& run : runs)
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] += run.path_accuracy[i];
  for (double& r : rate) r /= static_cast<double>(runs.size());
  return rate;
}

SampleEvaluation evaluate_sample(const ProcessModel& model, const Hmm& hmm, std::size_t test_runs,
                                 std::span<const std::size_t> lengths, double obs_prob, Rng& rng,
                                 const SimOptions& sim) {
  if (test_runs == 0) throw InvalidParameter("evaluate_sample: test_runs must be at least 1");
  SampleEvaluation out;
  out.seeds.resize(test_runs);
  for (auto& s : out.seeds) s = rng();
  out.runs.reserve(test_runs);
  for (std::uint64_t s : out.seeds) out.runs.push_back(evaluate_run(model, hmm, s, lengths, obs_prob, sim));
  return out;
}

SampleRecord run_sample(const SweepConfig& config, std::size_t m, double p, double q, std::uint64_t seed,
                        const SampleHook& hook, std::size_t cell_id, std::size_t sample) {
  const auto started = std::chrono::steady_clock::now();

  EnsembleParams params;
  params.n = config.n;
  params.m = m;
  params.p = p;
  params.q = q;
  params.requirement_min = config.requirement_min;
  params.requirement_max = config.requirement_max;
  params.duration_mean_min = config.duration_mean_min;
  params.duration_mean_max = config.duration_mean_max;
  params.t_min = config.t_min;
  params.t_max = config.t_max;
  params.seed = seed;
  const ProcessModel model = generate_model(params);

  const SimOptions sim{config.tick, config.concentration};
  HmmBuilder builder;
  double completion_sum = 0.0;
  for (std::size_t i = 0; i < config.sub_simulations; ++i) {
    const SimulationTrace trace = run_simulation(model, derive_seed(seed, {1, i}), sim);
    completion_sum += trace.total_time;
    builder.add(trace);
  }
  const std::vector<double> per_activity(model.n(), config.obs_prob);
  const Hmm hmm = builder.build(model, per_activity, {config.min_outgoing});

  Rng test_rng(derive_seed(seed, {2}));
  const auto lengths = config.lengths();
  const SampleEvaluation evaluation =
      evaluate_sample(model, hmm, config.test_runs, lengths, config.obs_prob, test_rng, sim);

  if (hook) hook(cell_id, sample, model, hmm);

  SampleRecord record;
  record.seed = seed;
  record.mean_completion_time = completion_sum / static_cast<double>(config.sub_simulations);
  record.state_count = hmm.state_count();
  record.triangular = hmm.topological_state_order().has_value();
  record.success_rate = evaluation.success_rate();
  record.path_accuracy = evaluation.path_accuracy();
  record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

namespace {

SuccessCurve aggregate(const std::vector<SampleRecord>& samples, std::span<const std::size_t> lengths,
                       double confidence, SemDivisor divisor) {
  SuccessCurve curve;
  curve.lengths.assign(lengths.begin(), lengths.end());
  curve.sample_count = samples.size();
  std::vector<double> rates(samples.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    for (std::size_t s = 0; s < samples.size(); ++s) rates[s] = samples[s].success_rate[i];
    const Band band = confidence_band(rates, confidence, divisor);
    curve.mean.push_back(band.mean);
    curve.band_low.push_back(band.low);
    curve.band_high.push_back(band.high);
  }
  return curve;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t m, double p, double q) {
  return derive_seed(master, {m, static_cast<std::uint64_t>(std::llround(p * 1e6)),
                              static_cast<std::uint64_t>(std::llround(q * 1e6))});
}

}  // namespace

ExperimentResult run_cell(const SweepConfig& config, std::size_t cell_id, std::size_t m, double p, double q,
                          const SampleHook& hook) {
  config.validate();
  ExperimentResult result;
  result.cell_id = cell_id;
  result.n = config.n;
  result.m = m;
  result.p = p;
  result.q = q;
  result.noise = config.obs_prob;

  const std::uint64_t base = cell_seed(config.master_seed, m, p, q);
  const std::size_t budget = config.replacement_factor * config.samples;

  std::vector<SampleRecord> records(config.samples);
  std::vector<std::size_t> replaced(config.samples, 0);
  std::vector<std::uint8_t> exhausted(config.samples, 0);
  std::vector<std::string> last_error(config.samples);

  parallel_for(config.samples, config.workers, [&](std::size_t s) {
    for (std::size_t attempt = 0;; ++attempt) {
      const std::uint64_t seed = attempt == 0 ? derive_seed(base, {0, s}) : derive_seed(base, {1, s, attempt});
      try {
        records[s] = run_sample(config, m, p, q, seed, hook, cell_id, s);
        return;
      } catch (const UnderSampledError& e) {
        last_error[s] = e.what();
        if (++replaced[s] > budget) {
          exhausted[s] = 1;
          return;
        }
      }
    }
  });

  result.replacements = std::accumulate(replaced.begin(), replaced.end(), std::size_t{0});
  if (result.replacements > budget) {
    result.failed = true;
    std::ostringstream os;
    os << "replacement budget of " << budget << " exhausted (" << result.replacements << " replacements)";
    for (std::size_t s = 0; s < config.samples; ++s)
      if (!last_error[s].empty()) {
        os << "; last error: " << last_error[s];
        break;
      }
    result.diagnostics = os.str();
    return result;
  }

  const auto lengths = config.lengths();
  result.curve = aggregate(records, lengths, config.confidence, config.sem_divisor);
  if (config.sem_divisor == SemDivisor::S)
    result.alternate_curve = aggregate(records, lengths, config.confidence, SemDivisor::SqrtS);
  result.cutoffs = cutoff_statistics(result.curve);

  result.path_accuracy.assign(lengths.size(), 0.0);
  double completion = 0.0;
  double states = 0.0;
  for (const auto& r : records) {
    for (std::size_t i = 0; i < lengths.size(); ++i) result.path_accuracy[i] += r.path_accuracy[i];
    completion += r.mean_completion_time;
    states += static_cast<double>(r.state_count);
    result.max_state_count = std::max(result.max_state_count, r.state_count);
    if (!r.triangular) ++result.non_triangular_samples;
  }
  const double count = static_cast<double>(records.size());
  for (double& a : result.path_accuracy) a /= count;
  result.mean_completion_time = completion / count;
  result.mean_state_count = states / count;
  result.samples = std::move(records);
  return result;
}

std::vector<ExperimentResult> run_sweep(const SweepConfig& config, const SampleHook& hook) {
  config.validate();
  std::vector<ExperimentResult> results;
  std::size_t cell_id = 0;
  for (std::size_t m : config.m_values)
    for (double p : config.p_values)
      for (double q : config.q_values) results.push_back(run_cell(config, cell_id++, m, p, q, hook));
  return results;
}

}  // namespace ttm
