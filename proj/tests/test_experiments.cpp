#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ttm/errors.hpp"
#include "ttm/experiments.hpp"
#include "ttm/io.hpp"

using namespace ttm;
using testing_util::fixed;

namespace {

ProcessModel diamond() {
  // 0 and 1 run in parallel on their own resources, 2 follows both.
  ProcessModel model;
  auto a0 = fixed(0, 1, {}, {1, 0, 0});
  a0.t_min = 1;
  a0.t_exp = 4;
  a0.t_max = 9;
  auto a1 = fixed(1, 1, {}, {0, 1, 0});
  a1.t_min = 2;
  a1.t_exp = 3;
  a1.t_max = 8;
  auto a2 = fixed(2, 1, {0, 1}, {0, 0, 1});
  a2.t_min = 1;
  a2.t_exp = 2;
  a2.t_max = 5;
  model.activities = {a0, a1, a2};
  model.availability = {1, 1, 1};
  return model;
}

SweepConfig smoke_config() {
  SweepConfig c;
  c.m_values = {4};
  c.p_values = {0.5};
  c.q_values = {0.4};
  c.n = 8;
  c.samples = 2;
  c.sub_simulations = 10;
  c.test_runs = 5;
  c.max_length = 12;
  c.duration_mean_max = 20;
  c.t_max = 20;
  return c;
}

}  // namespace

TEST_CASE("z_score") {
  CHECK(std::abs(z_score(95.0) - 1.959964) <= 1e-6);
  for (double x : {50.0, 68.27, 90.0, 99.0, 99.9})
    CHECK(std::abs(z_score(x) - std::sqrt(2.0) * oracle::erf_inv_bisection(x / 100.0)) <= 1e-9);
  CHECK_THROWS_AS(z_score(100.0), InvalidParameter);
  CHECK_THROWS_AS(z_score(0.0), InvalidParameter);
}

TEST_CASE("confidence_band") {
  const std::vector<double> same(10, 0.4);
  const auto flat = confidence_band(same, 95.0);
  CHECK(flat.mean == doctest::Approx(0.4));
  CHECK(flat.low == flat.high);

  const std::vector<double> two{0.0, 1.0};
  const auto wide = confidence_band(two, 95.0);
  CHECK(wide.low == 0.0);
  CHECK(wide.high == 1.0);
  const auto lit = confidence_band(std::vector<double>{0.4, 0.6, 0.5, 0.5}, 95.0, SemDivisor::S);
  const auto def = confidence_band(std::vector<double>{0.4, 0.6, 0.5, 0.5}, 95.0, SemDivisor::SqrtS);
  CHECK(lit.high - lit.low == doctest::Approx((def.high - def.low) / 2.0));
  CHECK_THROWS_AS(confidence_band(std::vector<double>{0.5}, 95.0), InvalidParameter);

  Rng rng(77);
  int covered = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> rates(100);
    for (auto& r : rates) r = uniform01(rng) < 0.7 ? 1.0 : 0.0;
    const auto band = confidence_band(rates, 95.0);
    if (band.low <= 0.7 && 0.7 <= band.high) ++covered;
  }
  CHECK(covered >= 90);
}

TEST_CASE("cutoff_statistics") {
  SuccessCurve curve;
  curve.lengths = {1, 2, 3, 4, 5};
  curve.mean = {0.2, 0.5, 0.8, 0.9, 0.9};
  const auto c = cutoff_statistics(curve);
  CHECK(c.max_rate == 0.9);
  CHECK(c.thresholds == std::vector<double>{0.5, 0.7, 0.9, 0.95});
  CHECK(c.required_lengths[2] == 4);
  CHECK(c.achieved_rates[2] == 0.9);
  CHECK(c.required_lengths[0] == 2);
  for (std::size_t i = 1; i < c.required_lengths.size(); ++i) CHECK(c.required_lengths[i - 1] <= c.required_lengths[i]);

  curve.mean = {0.6, 0.6, 0.6, 0.6, 0.6};
  for (auto l : cutoff_statistics(curve).required_lengths) CHECK(l == 1);
  curve.mean.clear();
  CHECK_THROWS_AS(cutoff_statistics(curve), InvalidParameter);
}

TEST_CASE("evaluate_sample with noiseless distinct emissions") {
  const auto model = diamond();
  const auto traces = run_ensemble(model, ensemble_seeds(5, 400));
  const auto hmm = build_hmm(traces, model, 1.0);

  // Every state emits a distinct deterministic symbol.
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < hmm.state_count(); ++i) {
    const auto e = hmm.emission(i);
    CHECK(std::all_of(e.begin(), e.end(), [](double x) { return x == 0.0 || x == 1.0; }));
    seen.emplace(e.begin(), e.end());
  }
  REQUIRE(seen.size() == hmm.state_count());

  const std::vector<std::size_t> lengths{1, 2, 3, 5, 8, 13, 21};
  Rng rng(9);
  const auto eval = evaluate_sample(model, hmm, 50, lengths, 1.0, rng);
  for (double r : eval.success_rate()) CHECK(r == 1.0);
  for (double r : eval.path_accuracy()) CHECK(r == 1.0);
}

TEST_CASE("evaluate_sample with uninformative emissions matches a brute-force decode") {
  // No resources at all: every symbol is empty, so decoding is prior-only.
  ProcessModel model;
  auto a0 = fixed(0, 1, {}, {0});
  a0.t_min = 1;
  a0.t_exp = 2.2;
  a0.t_max = 6;
  auto a1 = fixed(1, 1, {0}, {0});
  a1.t_min = 1;
  a1.t_exp = 1.7;
  a1.t_max = 4;
  model.activities = {a0, a1};
  model.availability = {1};
  const auto hmm = build_hmm(run_ensemble(model, ensemble_seeds(2, 500)), model, 0.5);
  REQUIRE(hmm.state_count() == 3);

  oracle::ToyHmm toy;
  toy.initial = hmm.initial();
  toy.transition = hmm.dense_transition();
  for (std::size_t i = 0; i < 3; ++i) toy.emission.emplace_back(hmm.emission(i).begin(), hmm.emission(i).end());

  const std::vector<std::size_t> lengths{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<ActivitySet> predicted;
  for (std::size_t l : lengths) {
    const std::vector<std::vector<std::uint8_t>> obs(l, std::vector<std::uint8_t>(1, 0));
    const auto best = oracle::brute_force_best_path(toy, obs);
    REQUIRE(best.runner_up < best.prob * (1.0 - 1e-9));
    predicted.push_back(hmm.state(best.path.back()).label);
  }

  Rng rng(21);
  const auto eval = evaluate_sample(model, hmm, 200, lengths, 0.5, rng);
  std::vector<double> expected(lengths.size(), 0.0);
  for (std::uint64_t s : eval.seeds) {
    const auto trace = run_simulation(model, s);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      const auto t = static_cast<std::int64_t>(lengths[i]) - 1;
      const ActivitySet truth = t < trace.tick_count() ? trace.at_tick(t).active : ActivitySet{};
      if (truth == predicted[i]) expected[i] += 1.0 / 200.0;
    }
  }
  const auto rate = eval.success_rate();
  for (std::size_t i = 0; i < lengths.size(); ++i) CHECK(rate[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("evaluate_run is independent of execution order") {
  EnsembleParams params;
  params.seed = 6;
  params.n = 10;
  params.m = 5;
  const auto model = generate_model(params);
  const auto hmm = build_hmm(run_ensemble(model, ensemble_seeds(6, 300)), model, 0.5);
  const std::vector<std::size_t> lengths{1, 5, 10, 20};
  Rng rng(1);
  const auto eval = evaluate_sample(model, hmm, 20, lengths, 0.5, rng);
  for (std::size_t i = eval.seeds.size(); i-- > 0;) {
    const auto again = evaluate_run(model, hmm, eval.seeds[i], lengths, 0.5);
    CHECK(again.success == eval.runs[i].success);
    CHECK(again.path_accuracy == eval.runs[i].path_accuracy);
  }
  CHECK_THROWS_AS(evaluate_run(model, hmm, 1, std::vector<std::size_t>{3, 2}, 0.5), InvalidParameter);
}

TEST_CASE("sweep smoke run") {
  const auto config = smoke_config();
  const auto results = run_sweep(config);
  REQUIRE(results.size() == 1);
  const auto& r = results[0];
  CHECK_FALSE(r.failed);
  CHECK(r.samples.size() == 2);
  CHECK(r.curve.lengths.size() == 12);
  CHECK(r.curve.sample_count == 2);
  for (std::size_t i = 0; i < r.curve.mean.size(); ++i) {
    CHECK(r.curve.band_low[i] <= r.curve.mean[i]);
    CHECK(r.curve.mean[i] <= r.curve.band_high[i]);
  }
  CHECK(io::summary_json(config, results) == io::summary_json(config, run_sweep(config)));
}

TEST_CASE("cell results depend only on the master seed and cell coordinates") {
  auto config = smoke_config();
  config.q_values = {0.2, 0.4};
  const auto both = run_sweep(config);
  REQUIRE(both.size() == 2);
  const auto single = run_cell(smoke_config(), 1, 4, 0.5, 0.4);
  CHECK(both[1].curve.mean == single.curve.mean);
  CHECK(both[1].mean_completion_time == single.mean_completion_time);

  config.workers = 3;
  const auto threaded = run_sweep(config);
  CHECK(io::summary_json(config, threaded) == io::summary_json(config, both));
}

TEST_CASE("sample hook sees every accepted sample") {
  const auto config = smoke_config();
  std::size_t calls = 0;
  run_sweep(config, [&](std::size_t, std::size_t, const ProcessModel& model, const Hmm& hmm) {
    ++calls;
    CHECK(hmm.resource_count() == model.m());
  });
  CHECK(calls == 2);
}

TEST_CASE("sweep config validation") {
  auto c = smoke_config();
  c.samples = 1;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = smoke_config();
  c.obs_prob = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = smoke_config();
  c.p_values = {1.2};
  CHECK_THROWS_AS(run_sweep(c), InvalidParameter);
}
