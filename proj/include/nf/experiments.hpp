#pragma once

#include "nf/config.hpp"
#include "nf/io.hpp"
#include "nf/phase.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace nf {

struct Check {
  std::string name;
  double value = 0;
  double threshold = 0;
  std::string relation;  // how value is compared with threshold, for the verdict table
  bool pass = false;
};

struct Report {
  int criterion = 0;
  std::string driver;
  std::string title;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();
  std::vector<Table> tables;
  std::vector<std::string> warnings;
  double seconds = 0;

  bool pass() const;
  void check(const std::string& name, double value, const std::string& relation, double threshold);
  void check_flag(const std::string& name, bool ok);
};

// Everything the drivers share: the front, its spectral data, the moving-frame dynamics
// and the noise. The symmetric-gain and half-resolution variants are built on first use.
class Lab {
 public:
  explicit Lab(const ExperimentConfig& cfg, bool with_gap = true);
  Lab(const Lab&) = delete;
  Lab& operator=(const Lab&) = delete;

  ExperimentConfig cfg;
  GridSpec grid;
  WaveSolution wave;
  SpectralData spectral;
  std::unique_ptr<FrozenDynamics> dyn;
  NoiseModel noise;
  Vec eta;

  const Lab& symmetric();
  const Lab& coarse();
  SimConfig sim_config(double epsilon) const;
  int steps() const;
  // <psi, mode_k(. + c t_n)> over the configured horizon
  const Mat& pairings();

 private:
  std::unique_ptr<Lab> symmetric_, coarse_;
  Mat pairings_;
};

Report exp_wave(Lab& lab);                // 1
Report exp_adjoint(Lab& lab);             // 2
Report exp_spectral(Lab& lab);            // 3
Report exp_residual_scaling(Lab& lab);    // 4
Report exp_phase_diffusion(Lab& lab);     // 5
Report exp_ou_stationarity(Lab& lab);     // 6
Report exp_m_convergence(Lab& lab);       // 7
Report exp_phase_optimality(Lab& lab);    // 8
Report exp_asymptotics(Lab& lab);         // 9
Report exp_numerics(Lab& lab);            // 10

inline constexpr int kCriteria = 10;
Report run_criterion(Lab& lab, int criterion);

// JSON summary with schema version, config hash and seed.
nlohmann::json report_json(const Report& r, const ExperimentConfig& cfg);
// Writes <dir>/criterion_<n>.json and one CSV per table.
void save_report(const Report& r, const ExperimentConfig& cfg, const std::string& dir);
std::string verdict_line(const Report& r);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

}  // namespace nf
