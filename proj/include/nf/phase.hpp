#pragma once

#include "nf/sim.hpp"

#include <vector>

namespace nf {

// h - <h, psi_t> / <u-hat_x,t, psi_t> u-hat_x,t with f_t = f(. - c t): the rho_t-orthogonal
// projection off the direction of motion (the denominator is 1 up to interpolation error).
Vec project_orth(const Vec& h, double t, const WaveSolution& ws, const SpectralData& sd);

struct PhaseTrace {
  std::vector<double> times;
  std::vector<double> c_m;  // dC/dt
  std::vector<double> C_m;
  double relaxation_m = 0;
};

// Integrates dC/dt = -m <u - u-hat(. - C), psi(. - C)> along recorded moving-frame
// fields (u = u-hat + v), classical RK4 with the record spacing as step and linear
// interpolation between records for the half steps.
PhaseTrace track_phase_m(const std::vector<double>& times, const std::vector<Vec>& v, double m,
                         const FrozenDynamics& dyn, double c_init = 0.0);
PhaseTrace track_phase_m(const SimPath& path, double m, const FrozenDynamics& dyn);

// <psi, mode_k(. + c t_n)> for every step n, shared by all paths with the same (dt, steps).
Mat noise_pairing_table(const NoiseModel& noise, const Vec& psi, double speed, double dt, int steps);

// C0 at every step: -<eta, psi> - sum_{k<n} <psi(. - c t_k), dW_k>.
Vec compute_C0(const SimPath& path, const Mat& pairing_table, const Vec& eta, const Vec& w, const Vec& psi);
Vec compute_C0(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta);

struct ExpansionOptions {
  int order = 2;                  // 1: C0, v0 only
  std::vector<double> m_ladder;   // finite-m companions to integrate alongside
  bool keep_fields = true;
};

struct FiniteM {
  double m = 0;
  std::vector<double> C0, C1;
  std::vector<Vec> v0, v1;
};

// Values at the record times of the path; fields are in the moving frame.
struct ExpansionCoefficients {
  std::vector<double> times;
  std::vector<double> C0, C1;
  std::vector<Vec> v0, v1;
  std::vector<double> v1_pairing;     // <v1, psi>
  std::vector<double> v1_identity;    // C0 <v0, psi_x>
  double max_orthogonality = 0;       // max over steps of |<v0, psi>| / (|v0| |psi|)
  std::vector<FiniteM> finite_m;
};

// One pass over the increments of `path` (its epsilon is irrelevant): C0, v0, and at
// order 2 also C1, v1. Every step uses the same exponential step as the simulator.
ExpansionCoefficients expand_path(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise,
                                  const Vec& eta, const ExpansionOptions& opt = {});

std::vector<Vec> evolve_v0(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta);
std::vector<double> compute_C1(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise,
                               const Vec& eta);
std::vector<Vec> evolve_v1(const SimPath& path, const FrozenDynamics& dyn, const NoiseModel& noise, const Vec& eta);

}  // namespace nf
