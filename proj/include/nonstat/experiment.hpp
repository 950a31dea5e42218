#ifndef NONSTAT_EXPERIMENT_HPP
#define NONSTAT_EXPERIMENT_HPP

#include <cstdint>
#include <string>

#include "json.hpp"
#include "nonstat/io.hpp"

namespace nonstat {

// Deterministic experiment description: (config, seed) -> identical outputs.
struct ExperimentConfig {
  std::string experiment = "custom";  // fig1 | fig2 | fig2_cutlocus | fig3 | custom
  std::uint64_t seed = 1;
  int M = 0;  // realizations; 0 keeps the preset default
  int n = 0;  // grid points per axis; 0 keeps the preset default
  int workers = 1;
  bool force = false;  // lift cost caps (e.g. the 400^2 simulation)
  std::string out_dir = ".";
  int band_modes = 16;   // d=1 frequency-band width for empirical summaries
  int radial_bins = 24;  // d=2 radial profile bins
  nlohmann::json model_json;  // custom experiments carry a full model block
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct RadialProfile {
  rvec center;
  rvec mean;
  std::vector<std::size_t> count;  // empty bins flagged by count == 0
};

// Equal-width |l| bins over a d=2 spectrum, excluding l = 0.
RadialProfile radial_profile(const GridSpec& g, const rvec& spectrum, int nbins);

// Runners write CSV summaries (byte-stable under a fixed seed) plus a
// summary JSON (carries timings; not byte-stable) into cfg.out_dir.
void run_fig1(const ExperimentConfig& cfg);
void run_fig2(const ExperimentConfig& cfg);  // fig2_cutlocus adds the cut-locus band
void run_fig3(const ExperimentConfig& cfg);
void run_custom(const ExperimentConfig& cfg);

int run_experiment(const ExperimentConfig& cfg);

// Built-in preset model descriptors (paper parameter sets).
nlohmann::json preset_model_json(const std::string& experiment, int n_override);

}  // namespace nonstat

#endif
