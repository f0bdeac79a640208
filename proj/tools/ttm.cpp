// ttm: generate process models, simulate them, train and query the HMM,
// and run parameter sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ttm/errors.hpp"
#include "ttm/experiments.hpp"
#include "ttm/hmm.hpp"
#include "ttm/io.hpp"
#include "ttm/model.hpp"
#include "ttm/predictor.hpp"
#include "ttm/simulation.hpp"

namespace {

using nlohmann::json;

enum Exit : int { kOk = 0, kInvalid = 2, kUnderSampled = 3, kDecode = 4, kIo = 5 };

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    ttm::io::write_file(path, text);
  }
}

std::string load(const std::string& path, const char* flag = "--config") {
  if (path.empty()) throw ttm::InvalidParameter(std::string("missing required input ") + flag);
  return ttm::io::read_file(path);
}

std::vector<ttm::SimulationTrace> load_traces(const std::string& path) {
  const std::string text = load(path, "--traces");
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return ttm::io::traces_from_json(text);
  return {ttm::io::trace_from_json(text)};
}

// Fills options the user did not pass on the command line from the JSON
// config. Keys use the long option name with '-' or '_'.
void apply_config(CLI::App* cmd, const json& doc) {
  if (!doc.is_object()) throw ttm::InvalidParameter("config: expected a JSON object");
  if (doc.contains("command") && doc.at("command") != cmd->get_name())
    throw ttm::InvalidParameter("config: file is for command \"" + doc.at("command").get<std::string>() +
                                "\", not \"" + cmd->get_name() + "\"");
  for (const auto& item : doc.items()) {
    if (item.key() == "command" || item.key() == "config") continue;
    std::string name = item.key();
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + name);
    } catch (const CLI::OptionNotFound&) {
      throw ttm::InvalidParameter("config: unknown key \"" + item.key() + "\" for command " + cmd->get_name());
    }
    if (opt->count() > 0) continue;
    auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (item.value().is_array()) {
      for (const auto& v : item.value()) opt->add_result(as_text(v));
    } else {
      opt->add_result(as_text(item.value()));
    }
    opt->run_callback();
  }
}

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON file with option values; flags override it");
  cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
  cmd->add_option("--seed", c.seed, "Seed for all randomness");
  cmd->add_option("--workers", c.workers, "Maximum worker threads")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  Common common;
  ttm::EnsembleParams params;
};

int cmd_generate(GenerateArgs& a) {
  a.params.seed = a.common.seed;
  const auto model = ttm::generate_model(a.params);
  std::size_t dag_edges = 0;
  std::size_t map_edges = 0;
  for (const auto& act : model.activities) {
    dag_edges += act.parents.size();
    for (int r : act.required) map_edges += r > 0 ? 1 : 0;
  }
  emit(a.common.out, ttm::io::to_json(model));
  auto& log = a.common.out.empty() ? std::cerr : std::cout;
  log << "n=" << model.n() << " m=" << model.m() << " dag_edges=" << dag_edges << " map_edges=" << map_edges << '\n';
  return kOk;
}

struct SimulateArgs {
  Common common;
  std::string model;
  std::size_t runs = 1;
  double tick = 1.0;
  double concentration = 4.0;
  std::string obs_out;
  double obs_prob = 0.5;
  std::string obs_format = "json";
  std::size_t obs_tail = 0;
};

int cmd_simulate(SimulateArgs& a) {
  const auto model = ttm::io::model_from_json(load(a.model, "--model"));
  const ttm::SimOptions sim{a.tick, a.concentration};
  const auto seeds = ttm::ensemble_seeds(a.common.seed, a.runs);
  const auto traces = ttm::run_ensemble(model, seeds, sim, a.common.workers);
  emit(a.common.out, a.runs == 1 ? ttm::io::to_json(traces.front()) : ttm::io::traces_to_json(traces));

  if (!a.obs_out.empty()) {
    // Noisy observations of the first run, one symbol per tick.
    const std::vector<double> probs(model.n(), a.obs_prob);
    ttm::Rng noise(ttm::derive_seed(a.common.seed, {0x0b5e}));
    ttm::ObservationSequence obs;
    const auto& trace = traces.front();
    for (std::int64_t t = 0; t < trace.tick_count(); ++t)
      obs.push_back(ttm::sample_observation(ttm::emission_vector(model, trace.at_tick(t).active, probs), noise));
    for (std::size_t k = 0; k < a.obs_tail || obs.empty(); ++k)
      obs.push_back(ttm::ObservationSymbol{std::vector<std::uint8_t>(model.m(), 0)});
    emit(a.obs_out, a.obs_format == "csv" ? ttm::io::observations_to_csv(obs) : ttm::io::observations_to_json(obs));
  }
  return kOk;
}

struct TrainArgs {
  Common common;
  std::string model;
  std::string traces;
  std::size_t runs = 1000;
  double obs_prob = 0.5;
  double tick = 1.0;
  double concentration = 4.0;
  std::uint64_t min_outgoing = 1;
};

int cmd_train(TrainArgs& a) {
  const auto model = ttm::io::model_from_json(load(a.model, "--model"));
  std::vector<ttm::SimulationTrace> traces;
  if (!a.traces.empty()) {
    traces = load_traces(a.traces);
  } else {
    traces = ttm::run_ensemble(model, ttm::ensemble_seeds(a.common.seed, a.runs), {a.tick, a.concentration},
                               a.common.workers);
  }
  ttm::HmmBuildOptions opts;
  opts.min_outgoing = a.min_outgoing;
  const auto hmm = ttm::build_hmm(traces, model, a.obs_prob, opts);
  emit(a.common.out, ttm::io::to_json(hmm));
  std::cerr << "states=" << hmm.state_count() << " traces=" << traces.size() << '\n';
  return kOk;
}

struct InferArgs {
  Common common;
  std::string hmm;
  std::string obs;
};

int cmd_infer(InferArgs& a) {
  const auto hmm = ttm::io::hmm_from_json(load(a.hmm, "--hmm"));
  const auto obs = ttm::io::observations_from_text(load(a.obs, "--obs"), hmm.resource_count());
  const auto result = ttm::viterbi(hmm, obs);
  if (!result.viable())
    throw ttm::DecodeError("infer: observations admit no viable path (first impossible position " +
                           std::to_string(*result.failed_at) + ")");
  json path = json::array();
  for (std::size_t s : result.path) path.push_back(hmm.state(s).label);
  const json report = {{"length", obs.size()},
                       {"path", path},
                       {"final_state", hmm.state(result.path.back()).label},
                       {"final_index", result.path.back()},
                       {"log_prob", result.log_prob},
                       {"log_likelihood", ttm::forward(hmm, obs)}};
  emit(a.common.out, report.dump(2));
  return kOk;
}

struct PredictArgs {
  Common common;
  std::string model;
  std::string hmm;
  std::string obs;
  std::size_t ensemble = 1000;
  double tick = 1.0;
  double concentration = 4.0;
  bool credit_elapsed = false;
};

int cmd_predict(PredictArgs& a) {
  const auto model = ttm::io::model_from_json(load(a.model, "--model"));
  const auto hmm = ttm::io::hmm_from_json(load(a.hmm, "--hmm"));
  const auto obs = ttm::io::observations_from_text(load(a.obs, "--obs"), hmm.resource_count());
  ttm::PredictOptions opts;
  opts.ensemble_size = a.ensemble;
  opts.seed = a.common.seed;
  opts.sim = {a.tick, a.concentration};
  opts.credit_elapsed = a.credit_elapsed;
  opts.workers = a.common.workers;
  const auto forecast = ttm::predict_ttm(model, hmm, obs, opts);
  emit(a.common.out, ttm::io::to_json(forecast));
  std::cerr << "remaining mean=" << forecast.mean << " q05=" << forecast.q05 << " q95=" << forecast.q95 << '\n';
  return kOk;
}

struct SweepArgs {
  Common common;
  std::string sem_divisor;
  std::optional<std::size_t> samples;
};

int cmd_sweep(SweepArgs& a, CLI::App* cmd) {
  ttm::SweepConfig config;
  if (!a.common.config.empty()) {
    const std::string text = load(a.common.config);
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_object() && doc.contains("command") && doc.at("command") != "sweep")
      throw ttm::InvalidParameter("config: file is not for command \"sweep\"");
    config = ttm::io::sweep_config_from_json(text);
  }
  if (cmd->get_option("--seed")->count() > 0) config.master_seed = a.common.seed;
  if (cmd->get_option("--workers")->count() > 0) config.workers = a.common.workers;
  if (a.samples) config.samples = *a.samples;
  if (a.sem_divisor == "S") config.sem_divisor = ttm::SemDivisor::S;
  if (a.sem_divisor == "sqrt_s") config.sem_divisor = ttm::SemDivisor::SqrtS;
  config.validate();

  const auto results = ttm::run_sweep(config);
  const std::filesystem::path dir = a.common.out.empty() ? "sweep_out" : a.common.out;
  ttm::io::write_sweep_outputs(dir, config, results);
  for (const auto& r : results) {
    std::cerr << "cell " << r.cell_id << " m=" << r.m << " p=" << r.p << " q=" << r.q;
    if (r.failed) {
      std::cerr << " FAILED: " << r.diagnostics << '\n';
    } else {
      std::cerr << " completion=" << r.mean_completion_time << " states(max)=" << r.max_state_count << '\n';
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-to-market estimation with hidden Markov models over simulated process runs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Draw a random process model");
  add_common(g, gen.common);
  g->add_option("--n", gen.params.n, "Number of activities");
  g->add_option("--m", gen.params.m, "Number of resources");
  g->add_option("--p", gen.params.p, "Dependency edge probability");
  g->add_option("--q", gen.params.q, "Resource map edge probability");
  g->add_option("--requirement-min", gen.params.requirement_min);
  g->add_option("--requirement-max", gen.params.requirement_max);
  g->add_option("--duration-mean-min", gen.params.duration_mean_min);
  g->add_option("--duration-mean-max", gen.params.duration_mean_max);
  g->add_option("--t-min", gen.params.t_min);
  g->add_option("--t-max", gen.params.t_max);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the process model");
  add_common(s, sim.common);
  s->add_option("--model", sim.model, "Model JSON");
  s->add_option("--runs", sim.runs, "Number of runs")->check(CLI::PositiveNumber);
  s->add_option("--tick", sim.tick, "Tick length in days");
  s->add_option("--concentration", sim.concentration, "Beta shape budget");
  s->add_option("--obs-out", sim.obs_out, "Also write noisy observations of the first run here");
  s->add_option("--obs-prob", sim.obs_prob, "Per-activity observation probability");
  s->add_option("--obs-format", sim.obs_format)->check(CLI::IsMember({"json", "csv"}));
  s->add_option("--obs-tail", sim.obs_tail, "Empty ticks appended after the run has finished");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Build the HMM from an ensemble of runs");
  add_common(t, train.common);
  t->add_option("--model", train.model, "Model JSON");
  t->add_option("--traces", train.traces, "Trace JSON (simulated from --seed when omitted)");
  t->add_option("--runs", train.runs, "Ensemble size when simulating")->check(CLI::PositiveNumber);
  t->add_option("--obs-prob", train.obs_prob, "Per-activity observation probability");
  t->add_option("--tick", train.tick);
  t->add_option("--concentration", train.concentration);
  t->add_option("--min-outgoing", train.min_outgoing, "Minimum outgoing transitions per state");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Decode an observation sequence");
  add_common(i, infer.common);
  i->add_option("--hmm", infer.hmm, "HMM JSON");
  i->add_option("--obs", infer.obs, "Observations (JSON list of resource lists, or 0/1 CSV)");

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Forecast the remaining time to completion");
  add_common(p, pred.common);
  p->add_option("--model", pred.model, "Model JSON");
  p->add_option("--hmm", pred.hmm, "HMM JSON");
  p->add_option("--obs", pred.obs, "Observations");
  p->add_option("--ensemble", pred.ensemble, "Resumed runs")->check(CLI::PositiveNumber);
  p->add_option("--tick", pred.tick);
  p->add_option("--concentration", pred.concentration);
  p->add_flag("--credit-elapsed", pred.credit_elapsed, "Credit time already spent on active activities");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "Run the accuracy experiment over (m, p, q) cells");
  add_common(w, sweep.common);
  w->add_option("--samples", sweep.samples, "Samples per cell");
  w->add_option("--sem-divisor", sweep.sem_divisor)->check(CLI::IsMember({"sqrt_s", "S"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    auto configure = [](CLI::App* cmd, const Common& c) {
      if (c.config.empty()) return;
      const std::string text = load(c.config);
      const json doc = json::parse(text, nullptr, false);
      if (doc.is_discarded()) throw ttm::InvalidParameter("config: malformed JSON in " + c.config);
      apply_config(cmd, doc);
    };
    if (g->parsed()) {
      configure(g, gen.common);
      return cmd_generate(gen);
    }
    if (s->parsed()) {
      configure(s, sim.common);
      return cmd_simulate(sim);
    }
    if (t->parsed()) {
      configure(t, train.common);
      return cmd_train(train);
    }
    if (i->parsed()) {
      configure(i, infer.common);
      return cmd_infer(infer);
    }
    if (p->parsed()) {
      configure(p, pred.common);
      return cmd_predict(pred);
    }
    if (w->parsed()) return cmd_sweep(sweep, w);
  } catch (const ttm::UnderSampledError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnderSampled;
  } catch (const ttm::DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDecode;
  } catch (const ttm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ttm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
