#pragma once

#include "nf/noise.hpp"
#include "nf/wave.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EtaSpec {
  double amplitude = 0.04;
  double center = 0.0;
  double width = 1.5;  // eta = amplitude exp(-(x - center)^2 / (2 width^2))
};

struct SimSettings {
  double horizon = 10.0;
  double dt = 1e-3;
  double q_exponent = 0.25;
  int record_stride = 10;
  EtaSpec eta;
};

struct ExperimentSettings {
  std::vector<double> epsilon_ladder = {0.1, 0.05, 0.025, 0.0125};
  int n_paths = 500;           // phase-diffusion ensemble
  int expansion_paths = 48;    // residual scaling, per epsilon (common noise across the ladder)
  int optimality_paths = 24;
  int ou_paths = 160;
  double ou_envelope = 100.0;  // envelope width of the near translation invariant noise used for the OU plateau
  std::vector<double> m_ladder = {10, 100, 1000};
  int m_paths = 4;
  double window_start = 0.5;   // left end of the [delta, T] window for finite-m comparisons
  std::vector<double> convergence_dt = {4e-3, 2e-3, 1e-3};
  double convergence_horizon = 1.0;
  int convergence_paths = 8;
  double convergence_epsilon = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct ExperimentConfig {
  ModelParams model;
  double half_length = 40.0;
  int n_points = 2048;
  NoiseSpec noise{.rank = 16, .corr_length = 2.0, .envelope = 10.0, .amplitude = 0.08, .decay_exponent = 0.25};
  SimSettings sim;
  ExperimentSettings experiments;
  std::string output_dir = "out";

  GridSpec grid() const { return GridSpec::make(half_length, n_points); }
};

// "default" selects the built-in configuration; anything else is a JSON file path.
// Unknown keys and out-of-range values are rejected.
ExperimentConfig load_config(const std::string& source);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);
// FNV-1a of the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

Vec make_eta(const EtaSpec& e, const GridSpec& g);

}  // namespace nf
