#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttm/hmm.hpp"
#include "ttm/model.hpp"
#include "ttm/simulation.hpp"

namespace ttm {

// Standard error of the mean: sqrt(V)/sqrt(S) (default) or sqrt(V)/S.
enum class SemDivisor { SqrtS, S };

struct SweepConfig {
  std::size_t n = 20;
  std::vector<std::size_t> m_values{5, 10, 15};
  std::vector<double> p_values{0.2, 0.4, 0.6, 0.8};
  std::vector<double> q_values{0.2, 0.4, 0.6, 0.8};
  std::size_t samples = 100;
  std::size_t sub_simulations = 1000;
  std::size_t test_runs = 100;
  std::size_t max_length = 100;
  double obs_prob = 0.5;
  double tick = 1.0;
  double concentration = 4.0;
  double confidence = 95.0;
  std::uint64_t master_seed = 1;
  int requirement_min = 1;
  int requirement_max = 20;
  double duration_mean_min = 1.0;
  double duration_mean_max = 200.0;
  double t_min = 1.0;
  double t_max = 200.0;
  SemDivisor sem_divisor = SemDivisor::SqrtS;
  // A cell fails once more than replacement_factor * samples replacement
  // draws were needed.
  std::size_t replacement_factor = 5;
  std::uint64_t min_outgoing = 1;
  // Carried through to the output for bookkeeping; it has no effect.
  double sensitivity = 0.1;
  unsigned workers = 1;

  void validate() const;
  std::vector<std::size_t> lengths() const;
};

struct Band {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// sqrt(2) * erfinv(confidence_percent / 100).
double z_score(double confidence_percent);

// mean +/- z * SEM, clamped to [0, 1]. Needs at least two rates.
Band confidence_band(std::span<const double> rates, double confidence_percent,
                     SemDivisor divisor = SemDivisor::SqrtS);

struct SuccessCurve {
  std::vector<std::size_t> lengths;
  std::vector<double> mean;
  std::vector<double> band_low;
  std::vector<double> band_high;
  std::size_t sample_count = 0;
};

inline constexpr std::array<double, 4> kCutoffThresholds{0.5, 0.7, 0.9, 0.95};

struct CutoffSummary {
  double max_rate = 0.0;
  std::vector<double> thresholds;
  std::vector<std::size_t> required_lengths;
  std::vector<double> achieved_rates;
};

// For each threshold t, the first length whose mean reaches t * max(mean).
CutoffSummary cutoff_statistics(const SuccessCurve& curve);

// Outcome of one ground-truth run, indexed like `lengths`.
struct RunEvaluation {
  std::vector<std::uint8_t> success;        // final decoded label == true label
  std::vector<double> path_accuracy;        // fraction of ticks decoded correctly
  std::vector<ActivitySet> truth;           // true active set at tick length - 1
  std::vector<std::optional<ActivitySet>> decoded;  // nullopt if no viable path
};

// Simulates a fresh ground truth with `seed`, emits one noisy observation
// per tick from the true active set (terminal once the process is over) and
// decodes every requested prefix.
RunEvaluation evaluate_run(const ProcessModel& model, const Hmm& hmm, std::uint64_t seed,
                           std::span<const std::size_t> lengths, double obs_prob,
                           const SimOptions& sim = {});

struct SampleEvaluation {
  std::vector<std::uint64_t> seeds;
  std::vector<RunEvaluation> runs;

  std::vector<double> success_rate() const;
  std::vector<double> path_accuracy() const;
};

// Draws one ground-truth seed per test run from `rng`, then evaluates.
SampleEvaluation evaluate_sample(const ProcessModel& model, const Hmm& hmm, std::size_t test_runs,
                                 std::span<const std::size_t> lengths, double obs_prob, Rng& rng,
                                 const SimOptions& sim = {});

struct SampleRecord {
  std::uint64_t seed = 0;
  double mean_completion_time = 0.0;
  std::size_t state_count = 0;
  bool triangular = true;
  std::vector<double> success_rate;
  std::vector<double> path_accuracy;
  double seconds = 0.0;
};

// Results of one (m, p, q) cell.
struct ExperimentResult {
  std::size_t cell_id = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  double p = 0.0;
  double q = 0.0;
  double noise = 0.0;
  bool failed = false;
  std::string diagnostics;
  SuccessCurve curve;
  // Bands under the other SEM divisor, filled when the paper-style S
  // divisor is selected so both are available.
  std::optional<SuccessCurve> alternate_curve;
  std::vector<double> path_accuracy;
  CutoffSummary cutoffs;
  double mean_completion_time = 0.0;
  std::size_t replacements = 0;
  std::size_t max_state_count = 0;
  double mean_state_count = 0.0;
  std::size_t non_triangular_samples = 0;
  std::vector<SampleRecord> samples;
};

// Called once per accepted sample, possibly from worker threads.
using SampleHook = std::function<void(std::size_t cell_id, std::size_t sample, const ProcessModel& model,
                                      const Hmm& hmm)>;

// Builds, trains and evaluates one sample drawn from `seed`. Throws
// UnderSampledError when the training ensemble misses transition evidence.
SampleRecord run_sample(const SweepConfig& config, std::size_t m, double p, double q, std::uint64_t seed,
                        const SampleHook& hook = {}, std::size_t cell_id = 0, std::size_t sample = 0);

ExperimentResult run_cell(const SweepConfig& config, std::size_t cell_id, std::size_t m, double p, double q,
                          const SampleHook& hook = {});

// Every (m, p, q) combination in config order (m outermost). Each cell's
// random streams depend only on (master_seed, m, p, q).
std::vector<ExperimentResult> run_sweep(const SweepConfig& config, const SampleHook& hook = {});

}  // namespace ttm
