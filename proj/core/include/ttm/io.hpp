#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ttm/experiments.hpp"
#include "ttm/hmm.hpp"
#include "ttm/model.hpp"
#include "ttm/predictor.hpp"
#include "ttm/simulation.hpp"

namespace ttm::io {

// JSON documents. Parsers throw InvalidParameter on schema violations.
std::string to_json(const ProcessModel& model);
ProcessModel model_from_json(std::string_view text);

std::string to_json(const SimulationTrace& trace);
SimulationTrace trace_from_json(std::string_view text);

std::string traces_to_json(const std::vector<SimulationTrace>& traces);
std::vector<SimulationTrace> traces_from_json(std::string_view text);

std::string to_json(const Hmm& hmm);
Hmm hmm_from_json(std::string_view text);

std::string to_json(const TtmForecast& forecast);
TtmForecast forecast_from_json(std::string_view text);

std::string to_json(const SweepConfig& config);
SweepConfig sweep_config_from_json(std::string_view text);

// Observation sequences: a JSON list of lists of resource ids, or CSV with
// one 0/1 row of width m per tick. The format is detected from the first
// non-blank character.
ObservationSequence observations_from_text(std::string_view text, std::size_t m);
std::string observations_to_json(const ObservationSequence& obs);
std::string observations_to_csv(const ObservationSequence& obs);

// Shortest round-trip decimal form.
std::string format_double(double value);

// Sweep output tables.
inline constexpr std::string_view kSuccessHeader =
    "cell_id,m,p,q,noise,length,mean_success,band_low,band_high,sample_count";
inline constexpr std::string_view kCutoffHeader = "cell_id,threshold,required_length,achieved_rate";
inline constexpr std::string_view kPathAccuracyHeader = "cell_id,length,mean_path_accuracy";
inline constexpr std::string_view kAlternateBandHeader = "cell_id,length,band_low_sqrt_s,band_high_sqrt_s";

std::string success_csv(const std::vector<ExperimentResult>& results);
std::string cutoff_csv(const std::vector<ExperimentResult>& results);
std::string path_accuracy_csv(const std::vector<ExperimentResult>& results);
std::string alternate_band_csv(const std::vector<ExperimentResult>& results);
// Deterministic summary: no wall-clock values.
std::string summary_json(const SweepConfig& config, const std::vector<ExperimentResult>& results);
std::string timing_json(const std::vector<ExperimentResult>& results);

// Writes success.csv, cutoffs.csv, path_accuracy.csv, summary.json and
// timing.json (plus bands_sqrt_s.csv with the S divisor) into `dir`.
void write_sweep_outputs(const std::filesystem::path& dir, const SweepConfig& config,
                         const std::vector<ExperimentResult>& results);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ttm::io
