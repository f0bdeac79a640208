#pragma once

#include <cstdint>
#include <vector>

#include "ttm/hmm.hpp"
#include "ttm/model.hpp"
#include "ttm/simulation.hpp"

namespace ttm {

// Remaining time-to-market distribution from a decoded progress point.
struct TtmForecast {
  std::vector<double> remaining_samples;  // days, one per resumed run
  double mean = 0.0;
  double std = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  ActivitySet inferred_active;
  ActivitySet inferred_completed;
  double decode_log_prob = kNegInf;

  bool operator==(const TtmForecast&) const = default;
};

struct PredictOptions {
  std::size_t ensemble_size = 1000;
  std::uint64_t seed = 0;
  SimOptions sim;
  // When set, activities in the decoded final state resume with the time
  // they have been continuously active at the end of the decoded path
  // credited; otherwise they restart from zero progress.
  bool credit_elapsed = false;
  unsigned workers = 1;
};

// Decodes `obs`, marks every ancestor of the final decoded active set as
// completed and re-simulates the rest. Run i uses seed
// ensemble_seeds(options.seed, ensemble_size)[i]. Throws DecodeError when
// the observations admit no viable path.
TtmForecast predict_ttm(const ProcessModel& model, const Hmm& hmm, const ObservationSequence& obs,
                        const PredictOptions& options = {});

// Fills mean, std (sample, n - 1) and the 5/50/95% quantiles (linear
// interpolation between order statistics) from remaining_samples.
void summarize(TtmForecast& forecast);

}  // namespace ttm
