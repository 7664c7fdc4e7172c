#pragma once

#include "nf/grid.hpp"

#include <cstdint>

namespace nf {

struct NoiseSpec {
  int rank = 16;
  double corr_length = 2.0;  // shortest wavelength among the harmonics
  double envelope = 10.0;    // Gaussian window width
  double amplitude = 1.0;
  double decay_exponent = 0.25;  // lambda_k = amplitude * 2^(-decay_exponent k)
};

// Counter-based stream: Philox4x32-10 keyed by the seed, counter (draw, step, path).
// Any (seed, path, step) block can be regenerated independently of the others.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

  // out[0..k) standard normals for the given step
  void normals(std::uint64_t step, int k, double* out) const;
  std::uint64_t next_step() { return step_++; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t path() const { return path_; }

 private:
  std::uint64_t seed_, path_;
  std::uint64_t step_ = 0;
};

class NoiseModel {
 public:
  GridSpec grid;
  NoiseSpec spec;
  Vec lambda;    // K
  Mat modes;     // N x K, orthonormal in the quadrature inner product
  Mat coef;      // K x K; modes = raw_basis(0) * coef
  double base_freq = 0.0;
  double trace_l2 = 0, trace_h1 = 0, trace_rho = 0, trace_h1_rho = 0;
  double gram_error = 0;  // max |modes^T W modes - I|

  int rank() const { return static_cast<int>(lambda.size()); }

  // windowed harmonics evaluated at x + s, one column each
  void raw_basis(double s, Mat& out) const;
  // sum_k b_k mode_k(x + s); b holds coefficients in the orthonormal mode basis
  void synthesize(double s, const Vec& b, Vec& out) const;
  // <g, mode_k(. + s)> for all k
  Vec pairings(double s, const Vec& g) const;

  // precomputed pieces for synthesize
  Vec env0, cos0, sin0;
};

NoiseModel make_noise(const NoiseSpec& spec, const GridSpec& g, const Vec& rho);

// b_k = lambda_k sqrt(dt) xi_k for the given step
void increment_coefficients(const NoiseModel& noise, double dt, const RngStream& rng, std::uint64_t step, Vec& b);

// One increment of the Q-Wiener process on the grid, advancing the stream.
Vec sample_increment(const NoiseModel& noise, double dt, RngStream& rng);

// <g, Q g>
double pair_quadratic(const NoiseModel& noise, const Vec& g);

}  // namespace nf
