#include "ttm/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ttm/errors.hpp"
#include "ttm/parallel.hpp"

namespace ttm {

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void summarize(TtmForecast& forecast) {
  const auto& xs = forecast.remaining_samples;
  if (xs.empty()) return;
  const double count = static_cast<double>(xs.size());
  forecast.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / count;
  double ss = 0.0;
  for (double x : xs) ss += (x - forecast.mean) * (x - forecast.mean);
  forecast.std = xs.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;

  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  forecast.q05 = quantile(sorted, 0.05);
  forecast.q50 = quantile(sorted, 0.50);
  forecast.q95 = quantile(sorted, 0.95);
}

TtmForecast predict_ttm(const ProcessModel& model, const Hmm& hmm, const ObservationSequence& obs,
                        const PredictOptions& options) {
  if (obs.empty()) throw InvalidParameter("predict_ttm: observation sequence is empty");
  if (options.ensemble_size == 0) throw InvalidParameter("predict_ttm: ensemble size must be at least 1");

  const ViterbiResult decoded = viterbi(hmm, obs);
  if (!decoded.viable())
    throw DecodeError("predict_ttm: observations admit no viable path (first impossible position " +
                      std::to_string(*decoded.failed_at) + ")");

  TtmForecast forecast;
  forecast.decode_log_prob = decoded.log_prob;
  forecast.inferred_active = hmm.state(decoded.path.back()).label;
  if (forecast.inferred_active.empty()) {
    // Terminal state: the whole process is done.
    forecast.inferred_completed.resize(model.n());
    std::iota(forecast.inferred_completed.begin(), forecast.inferred_completed.end(), 0);
  } else {
    forecast.inferred_completed = ancestor_closure(model, forecast.inferred_active);
  }

  std::map<int, double> in_progress;
  if (options.credit_elapsed) {
    for (int j : forecast.inferred_active) {
      std::size_t run = 0;
      for (std::size_t t = decoded.path.size(); t-- > 0;) {
        const auto& label = hmm.state(decoded.path[t]).label;
        if (!std::binary_search(label.begin(), label.end(), j)) break;
        ++run;
      }
      in_progress[j] = static_cast<double>(run) * options.sim.tick;
    }
  }

  const auto seeds = ensemble_seeds(options.seed, options.ensemble_size);
  forecast.remaining_samples.assign(seeds.size(), 0.0);
  parallel_for(seeds.size(), options.workers, [&](std::size_t i) {
    forecast.remaining_samples[i] =
        resume_simulation(model, forecast.inferred_completed, seeds[i], options.sim, in_progress).total_time;
  });
  summarize(forecast);
  return forecast;
}

}  // namespace ttm
