#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "ttm/errors.hpp"
#include "ttm/predictor.hpp"

using namespace ttm;

namespace {

// Chain a0(3) -> a1(4) where each activity holds its own resource.
ProcessModel observable_chain() {
  ProcessModel model;
  model.activities = {testing_util::fixed(0, 3, {}, {1, 0}), testing_util::fixed(1, 4, {0}, {0, 1})};
  model.availability = {1, 1};
  return model;
}

ObservationSequence ticks(std::initializer_list<std::pair<int, std::size_t>> runs) {
  ObservationSequence obs;
  for (auto [r, count] : runs) {
    ObservationSymbol s{std::vector<std::uint8_t>(2, 0)};
    if (r >= 0) s.present[r] = 1;
    obs.insert(obs.end(), count, s);
  }
  return obs;
}

}  // namespace

TEST_CASE("predict_ttm on a deterministic chain") {
  const auto model = observable_chain();
  const std::vector<SimulationTrace> traces{run_simulation(model, 1)};
  const auto hmm = build_hmm(traces, model, 1.0);
  PredictOptions options;
  options.ensemble_size = 25;
  options.seed = 3;

  SUBCASE("decoding the root state") {
    const auto f = predict_ttm(model, hmm, ticks({{0, 1}}), options);
    CHECK(f.inferred_active == ActivitySet{0});
    CHECK(f.inferred_completed.empty());
    REQUIRE(f.remaining_samples.size() == 25);
    for (double x : f.remaining_samples) CHECK(x == 7.0);
    CHECK(f.mean == 7.0);
    CHECK(f.std == 0.0);
    CHECK(f.q05 == 7.0);
    CHECK(f.q95 == 7.0);
  }

  SUBCASE("decoding the second activity") {
    const auto f = predict_ttm(model, hmm, ticks({{0, 3}, {1, 1}}), options);
    CHECK(f.inferred_active == ActivitySet{1});
    CHECK(f.inferred_completed == ActivitySet{0});
    CHECK(f.mean == 4.0);
    options.credit_elapsed = true;
    CHECK(predict_ttm(model, hmm, ticks({{0, 3}, {1, 3}}), options).mean == 1.0);
  }

  SUBCASE("decoding the terminal state") {
    const auto f = predict_ttm(model, hmm, ticks({{0, 3}, {1, 4}, {-1, 2}}), options);
    CHECK(f.inferred_active.empty());
    CHECK(f.inferred_completed == ActivitySet{0, 1});
    for (double x : f.remaining_samples) CHECK(x == 0.0);
  }

  SUBCASE("credited elapsed time") {
    options.credit_elapsed = true;
    const auto f = predict_ttm(model, hmm, ticks({{0, 2}}), options);
    CHECK(f.mean == 5.0);
  }

  SUBCASE("impossible observations") {
    const auto obs = ticks({{1, 1}});
    CHECK_THROWS_AS(predict_ttm(model, hmm, obs, options), DecodeError);
    CHECK_THROWS_AS(predict_ttm(model, hmm, {}, options), InvalidParameter);
  }
}

TEST_CASE("summarize") {
  TtmForecast f;
  f.remaining_samples = {4, 1, 3, 2, 5};
  summarize(f);
  CHECK(f.mean == 3.0);
  CHECK(f.std == doctest::Approx(std::sqrt(2.5)));
  CHECK(f.q50 == 3.0);
  CHECK(f.q05 == doctest::Approx(1.2));
  CHECK(f.q95 == doctest::Approx(4.8));
}

TEST_CASE("predict_ttm: matched seeds and worker independence") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    EnsembleParams params;
    params.seed = seed;
    params.p = 0.5;
    const auto model = generate_model(params);
    const auto traces = run_ensemble(model, ensemble_seeds(seed, 300));
    const auto hmm = build_hmm(traces, model, 0.5);

    // Observations from a fresh run, cut halfway.
    const auto truth = run_simulation(model, seed + 1000);
    Rng noise(seed);
    ObservationSequence obs;
    const std::vector<double> probs(model.n(), 0.5);
    for (std::int64_t t = 0; t < truth.tick_count() / 2; ++t)
      obs.push_back(sample_observation(emission_vector(model, truth.at_tick(t).active, probs), noise));

    PredictOptions options;
    options.ensemble_size = 200;
    options.seed = seed;
    TtmForecast f;
    try {
      f = predict_ttm(model, hmm, obs, options);
    } catch (const DecodeError&) {
      continue;  // the truth wandered outside the trained state space
    }
    // No completed activity descends from an active one.
    for (int j : f.inferred_completed) {
      const auto above = ancestor_closure(model, {j});
      for (int a : f.inferred_active) CHECK_FALSE(std::binary_search(above.begin(), above.end(), a));
    }
    options.workers = 3;
    CHECK(predict_ttm(model, hmm, obs, options) == f);
    if (f.inferred_active.empty()) continue;

    double full = 0.0;
    for (auto s : ensemble_seeds(seed, 200)) full += run_simulation(model, s).total_time;
    CHECK(f.mean <= full / 200.0);
  }
}
