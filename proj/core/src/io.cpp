#include "ttm/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ttm/errors.hpp"

namespace ttm::io {

using nlohmann::json;

namespace {

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string(what) + ": malformed JSON: " + e.what());
  }
}

// Runs `fn` translating library type/key errors into InvalidParameter.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string(what) + ": schema violation: " + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw InvalidParameter("format_double: conversion failed");
  return std::string(buffer, end);
}

// ---------------------------------------------------------------------------
// Process model

std::string to_json(const ProcessModel& model) {
  json activities = json::array();
  for (const auto& a : model.activities) {
    activities.push_back({{"id", a.id},
                          {"parents", a.parents},
                          {"required", a.required},
                          {"t_min", a.t_min},
                          {"t_exp", a.t_exp},
                          {"t_max", a.t_max}});
  }
  json doc = {{"n", model.n()}, {"m", model.m()}, {"availability", model.availability}, {"activities", activities}};
  return doc.dump(2);
}

ProcessModel model_from_json(std::string_view text) {
  const json doc = parse(text, "model");
  return guarded("model", [&] {
    ProcessModel model;
    model.availability = doc.at("availability").get<std::vector<int>>();
    for (const auto& a : doc.at("activities")) {
      Activity act;
      act.id = a.at("id").get<int>();
      act.parents = a.at("parents").get<std::vector<int>>();
      act.required = a.at("required").get<std::vector<int>>();
      act.t_min = a.at("t_min").get<double>();
      act.t_exp = a.at("t_exp").get<double>();
      act.t_max = a.at("t_max").get<double>();
      model.activities.push_back(std::move(act));
    }
    if (doc.at("n").get<std::size_t>() != model.n() || doc.at("m").get<std::size_t>() != model.m())
      throw InvalidParameter("model: n/m do not match the activity and availability arrays");
    for (std::size_t j = 0; j < model.n(); ++j)
      if (model.activities[j].id != static_cast<int>(j))
        throw InvalidParameter("model: activities must be listed in id order");
    return model;
  });
}

// ---------------------------------------------------------------------------
// Traces

namespace {

json trace_doc(const SimulationTrace& trace) {
  json ticks = json::array();
  for (const auto& span : trace.spans) {
    const json entry = {{"active", span.active}, {"used", span.used}};
    for (std::int64_t t = span.begin; t < span.end; ++t) ticks.push_back(entry);
  }
  return {{"tick", trace.tick},
          {"total_time", trace.total_time},
          {"starts", trace.starts},
          {"completions", trace.completions},
          {"ticks", ticks}};
}

SimulationTrace trace_from_doc(const json& doc) {
  return guarded("trace", [&] {
    SimulationTrace trace;
    trace.tick = doc.value("tick", 1.0);
    trace.total_time = doc.at("total_time").get<double>();
    trace.starts = doc.at("starts").get<std::vector<double>>();
    trace.completions = doc.at("completions").get<std::vector<double>>();
    std::int64_t t = 0;
    for (const auto& entry : doc.at("ticks")) {
      auto active = entry.at("active").get<ActivitySet>();
      auto used = entry.at("used").get<std::vector<int>>();
      if (!trace.spans.empty() && trace.spans.back().active == active && trace.spans.back().used == used) {
        trace.spans.back().end = t + 1;
      } else {
        trace.spans.push_back({t, t + 1, std::move(active), std::move(used)});
      }
      ++t;
    }
    return trace;
  });
}

}  // namespace

std::string to_json(const SimulationTrace& trace) { return trace_doc(trace).dump(); }

SimulationTrace trace_from_json(std::string_view text) { return trace_from_doc(parse(text, "trace")); }

std::string traces_to_json(const std::vector<SimulationTrace>& traces) {
  json doc = json::array();
  for (const auto& t : traces) doc.push_back(trace_doc(t));
  return doc.dump();
}

std::vector<SimulationTrace> traces_from_json(std::string_view text) {
  const json doc = parse(text, "traces");
  if (!doc.is_array()) throw InvalidParameter("traces: expected a JSON array");
  std::vector<SimulationTrace> out;
  for (const auto& t : doc) out.push_back(trace_from_doc(t));
  return out;
}

// ---------------------------------------------------------------------------
// HMM

std::string to_json(const Hmm& hmm) {
  json states = json::array();
  json emission = json::array();
  for (const auto& s : hmm.states()) {
    states.push_back({{"index", s.index}, {"label", s.label}});
    const auto e = hmm.emission(s.index);
    emission.push_back(std::vector<double>(e.begin(), e.end()));
  }
  json doc = {{"states", states},
              {"initial", hmm.initial()},
              {"transition", hmm.dense_transition()},
              {"emission", emission}};
  return doc.dump();
}

Hmm hmm_from_json(std::string_view text) {
  const json doc = parse(text, "hmm");
  return guarded("hmm", [&] {
    const auto& states = doc.at("states");
    std::vector<ActivitySet> labels(states.size());
    std::vector<std::uint8_t> seen(states.size(), 0);
    for (const auto& s : states) {
      const auto index = s.at("index").get<std::size_t>();
      if (index >= labels.size() || seen[index]) throw InvalidParameter("hmm: state indices must be a permutation");
      seen[index] = 1;
      labels[index] = s.at("label").get<ActivitySet>();
    }
    return Hmm::from_parts(std::move(labels), doc.at("initial").get<std::vector<double>>(),
                           doc.at("transition").get<std::vector<std::vector<double>>>(),
                           doc.at("emission").get<std::vector<std::vector<double>>>());
  });
}

// ---------------------------------------------------------------------------
// Forecast

std::string to_json(const TtmForecast& f) {
  json doc = {{"remaining_samples", f.remaining_samples},
              {"mean", f.mean},
              {"std", f.std},
              {"quantiles", {{"q05", f.q05}, {"q50", f.q50}, {"q95", f.q95}}},
              {"inferred_active", f.inferred_active},
              {"inferred_completed", f.inferred_completed},
              {"decode_log_prob", f.decode_log_prob}};
  return doc.dump(2);
}

TtmForecast forecast_from_json(std::string_view text) {
  const json doc = parse(text, "forecast");
  return guarded("forecast", [&] {
    TtmForecast f;
    f.remaining_samples = doc.at("remaining_samples").get<std::vector<double>>();
    f.mean = doc.at("mean").get<double>();
    f.std = doc.at("std").get<double>();
    const auto& q = doc.at("quantiles");
    f.q05 = q.at("q05").get<double>();
    f.q50 = q.at("q50").get<double>();
    f.q95 = q.at("q95").get<double>();
    f.inferred_active = doc.at("inferred_active").get<ActivitySet>();
    f.inferred_completed = doc.at("inferred_completed").get<ActivitySet>();
    const auto& lp = doc.at("decode_log_prob");
    f.decode_log_prob = lp.is_null() ? kNegInf : lp.get<double>();
    return f;
  });
}

// ---------------------------------------------------------------------------
// Sweep configuration

std::string to_json(const SweepConfig& c) {
  json doc = {{"n", c.n},
              {"m_values", c.m_values},
              {"p_values", c.p_values},
              {"q_values", c.q_values},
              {"samples", c.samples},
              {"sub_simulations", c.sub_simulations},
              {"test_runs", c.test_runs},
              {"max_length", c.max_length},
              {"obs_prob", c.obs_prob},
              {"tick", c.tick},
              {"concentration", c.concentration},
              {"confidence", c.confidence},
              {"master_seed", c.master_seed},
              {"requirement_min", c.requirement_min},
              {"requirement_max", c.requirement_max},
              {"duration_mean_min", c.duration_mean_min},
              {"duration_mean_max", c.duration_mean_max},
              {"t_min", c.t_min},
              {"t_max", c.t_max},
              {"sem_divisor", c.sem_divisor == SemDivisor::S ? "S" : "sqrt_s"},
              {"replacement_factor", c.replacement_factor},
              {"min_outgoing", c.min_outgoing},
              {"sensitivity", c.sensitivity}};
  return doc.dump(2);
}

SweepConfig sweep_config_from_json(std::string_view text) {
  const json doc = parse(text, "sweep config");
  return guarded("sweep config", [&] {
    static const std::vector<std::string> known{
        "command", "n", "m_values", "p_values", "q_values", "samples", "sub_simulations", "test_runs",
        "max_length", "obs_prob", "tick", "concentration", "confidence", "master_seed", "requirement_min",
        "requirement_max", "duration_mean_min", "duration_mean_max", "t_min", "t_max", "replacement_factor",
        "min_outgoing", "sensitivity", "workers", "sem_divisor"};
    if (!doc.is_object()) throw InvalidParameter("sweep config: expected a JSON object");
    for (const auto& item : doc.items())
      if (std::find(known.begin(), known.end(), item.key()) == known.end())
        throw InvalidParameter("sweep config: unknown key \"" + item.key() + "\"");
    SweepConfig c;
    auto read = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("n", c.n);
    read("m_values", c.m_values);
    read("p_values", c.p_values);
    read("q_values", c.q_values);
    read("samples", c.samples);
    read("sub_simulations", c.sub_simulations);
    read("test_runs", c.test_runs);
    read("max_length", c.max_length);
    read("obs_prob", c.obs_prob);
    read("tick", c.tick);
    read("concentration", c.concentration);
    read("confidence", c.confidence);
    read("master_seed", c.master_seed);
    read("requirement_min", c.requirement_min);
    read("requirement_max", c.requirement_max);
    read("duration_mean_min", c.duration_mean_min);
    read("duration_mean_max", c.duration_mean_max);
    read("t_min", c.t_min);
    read("t_max", c.t_max);
    read("replacement_factor", c.replacement_factor);
    read("min_outgoing", c.min_outgoing);
    read("sensitivity", c.sensitivity);
    read("workers", c.workers);
    if (doc.contains("sem_divisor")) {
      const auto d = doc.at("sem_divisor").get<std::string>();
      if (d == "S")
        c.sem_divisor = SemDivisor::S;
      else if (d == "sqrt_s")
        c.sem_divisor = SemDivisor::SqrtS;
      else
        throw InvalidParameter("sweep config: sem_divisor must be \"sqrt_s\" or \"S\"");
    }
    return c;
  });
}

// ---------------------------------------------------------------------------
// Observations

ObservationSequence observations_from_text(std::string_view text, std::size_t m) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw InvalidParameter("observations: input is empty");

  ObservationSequence obs;
  if (text[first] == '[') {
    const json doc = parse(text, "observations");
    guarded("observations", [&] {
      for (const auto& tick : doc) {
        const auto ids = tick.get<std::vector<int>>();
        obs.push_back(ObservationSymbol::from_resources(m, ids));
      }
      return 0;
    });
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ObservationSymbol symbol;
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) {
        cell.erase(std::remove_if(cell.begin(), cell.end(), [](char c) { return c == ' ' || c == '\r' || c == '\t'; }),
                   cell.end());
        if (cell == "0")
          symbol.present.push_back(0);
        else if (cell == "1")
          symbol.present.push_back(1);
        else
          throw InvalidParameter("observations: row " + std::to_string(row) + " has a non 0/1 cell");
      }
      if (symbol.present.size() != m)
        throw InvalidParameter("observations: row " + std::to_string(row) + " has width " +
                               std::to_string(symbol.present.size()) + ", expected " + std::to_string(m));
      obs.push_back(std::move(symbol));
    }
  }
  if (obs.empty()) throw InvalidParameter("observations: sequence is empty");
  return obs;
}

std::string observations_to_json(const ObservationSequence& obs) {
  json doc = json::array();
  for (const auto& symbol : obs) doc.push_back(symbol.resources());
  return doc.dump();
}

std::string observations_to_csv(const ObservationSequence& obs) {
  std::string out;
  for (const auto& symbol : obs) {
    for (std::size_t l = 0; l < symbol.present.size(); ++l) {
      if (l) out += ',';
      out += symbol.present[l] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep outputs

std::string success_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << kSuccessHeader << '\n';
  for (const auto& r : results) {
    if (r.failed) continue;
    for (std::size_t i = 0; i < r.curve.lengths.size(); ++i) {
      os << r.cell_id << ',' << r.m << ',' << format_double(r.p) << ',' << format_double(r.q) << ','
         << format_double(r.noise) << ',' << r.curve.lengths[i] << ',' << format_double(r.curve.mean[i]) << ','
         << format_double(r.curve.band_low[i]) << ',' << format_double(r.curve.band_high[i]) << ','
         << r.curve.sample_count << '\n';
    }
  }
  return os.str();
}

std::string cutoff_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << kCutoffHeader << '\n';
  for (const auto& r : results) {
    if (r.failed) continue;
    for (std::size_t i = 0; i < r.cutoffs.thresholds.size(); ++i)
      os << r.cell_id << ',' << format_double(r.cutoffs.thresholds[i]) << ',' << r.cutoffs.required_lengths[i]
         << ',' << format_double(r.cutoffs.achieved_rates[i]) << '\n';
  }
  return os.str();
}

std::string path_accuracy_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << kPathAccuracyHeader << '\n';
  for (const auto& r : results) {
    if (r.failed) continue;
    for (std::size_t i = 0; i < r.path_accuracy.size(); ++i)
      os << r.cell_id << ',' << r.curve.lengths[i] << ',' << format_double(r.path_accuracy[i]) << '\n';
  }
  return os.str();
}

std::string alternate_band_csv(const std::vector<ExperimentResult>& results) {
  std::ostringstream os;
  os << kAlternateBandHeader << '\n';
  for (const auto& r : results) {
    if (r.failed || !r.alternate_curve) continue;
    const auto& c = *r.alternate_curve;
    for (std::size_t i = 0; i < c.lengths.size(); ++i)
      os << r.cell_id << ',' << c.lengths[i] << ',' << format_double(c.band_low[i]) << ','
         << format_double(c.band_high[i]) << '\n';
  }
  return os.str();
}

std::string summary_json(const SweepConfig& config, const std::vector<ExperimentResult>& results) {
  json cells = json::array();
  for (const auto& r : results) {
    json cell = {{"cell_id", r.cell_id},
                 {"n", r.n},
                 {"m", r.m},
                 {"p", r.p},
                 {"q", r.q},
                 {"noise", r.noise},
                 {"failed", r.failed},
                 {"diagnostics", r.diagnostics},
                 {"replacements", r.replacements}};
    if (!r.failed) {
      cell["sample_count"] = r.curve.sample_count;
      cell["mean_completion_time"] = r.mean_completion_time;
      cell["max_state_count"] = r.max_state_count;
      cell["mean_state_count"] = r.mean_state_count;
      cell["non_triangular_samples"] = r.non_triangular_samples;
      cell["max_rate"] = r.cutoffs.max_rate;
      json cut = json::array();
      for (std::size_t i = 0; i < r.cutoffs.thresholds.size(); ++i)
        cut.push_back({{"threshold", r.cutoffs.thresholds[i]},
                       {"required_length", r.cutoffs.required_lengths[i]},
                       {"achieved_rate", r.cutoffs.achieved_rates[i]}});
      cell["cutoffs"] = cut;
    }
    cells.push_back(cell);
  }
  json doc = {{"config", json::parse(to_json(config))}, {"cells", cells}};
  return doc.dump(2);
}

std::string timing_json(const std::vector<ExperimentResult>& results) {
  json cells = json::array();
  for (const auto& r : results) {
    std::vector<double> seconds;
    for (const auto& s : r.samples) seconds.push_back(s.seconds);
    const double total = std::accumulate(seconds.begin(), seconds.end(), 0.0);
    cells.push_back({{"cell_id", r.cell_id},
                     {"seconds_per_sample", seconds},
                     {"mean_seconds", seconds.empty() ? 0.0 : total / static_cast<double>(seconds.size())}});
  }
  return json{{"cells", cells}}.dump(2);
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepConfig& config,
                         const std::vector<ExperimentResult>& results) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "success.csv", success_csv(results));
  write_file(dir / "cutoffs.csv", cutoff_csv(results));
  write_file(dir / "path_accuracy.csv", path_accuracy_csv(results));
  if (config.sem_divisor == SemDivisor::S) write_file(dir / "bands_sqrt_s.csv", alternate_band_csv(results));
  write_file(dir / "summary.json", summary_json(config, results));
  write_file(dir / "timing.json", timing_json(results));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ttm::io
