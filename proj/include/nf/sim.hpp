#pragma once

#include "nf/noise.hpp"
#include "nf/spectral.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace nf {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The equation for v = u - u-hat written in the frame moving with the front,
// x -> x - c t. The transport operator of the wave solver supplies the c d/dx term.
class FrozenDynamics {
 public:
  FrozenDynamics(const WaveSolution& ws, const SpectralData& sd);

  const WaveSolution& wave() const { return *ws_; }
  const SpectralData& spectral() const { return *sd_; }
  const GridSpec& grid() const { return ws_->grid; }
  const Vec& weights() const { return w_; }

  // L v = T v - v + C(F'(u-hat) v)
  void linear(const Vec& v, Vec& out) const;
  // T v - v + C(F(u-hat + v) - F(u-hat))
  void full(const Vec& v, Vec& out) const;
  // C(F''(u-hat) a)
  void second(const Vec& a, Vec& out) const;
  // <C(F''(u-hat) a), psi> without applying C: a . (F'' C^T W psi)
  double second_pairing(const Vec& a) const;

  const Vec& fp1() const { return fp1_; }
  const Vec& fp2() const { return fp2_; }

 private:
  const WaveSolution* ws_;
  const SpectralData* sd_;
  ExpConvolution conv_;
  Transport tr_;
  Vec w_, fu_, fp1_, fp2_, pair_second_;
  mutable Vec a_, b_;
};

struct SimConfig {
  double epsilon = 0.05;
  double horizon = 10.0;
  double dt = 1e-3;
  double q_exponent = 0.25;
  Vec initial_eta;  // empty means zero
  int record_stride = 10;
  bool stop_at_tau = true;
};

struct Norms {
  double l2 = 0, l2_rho = 0, h1_rho = 0;
};

struct SimPath {
  std::vector<double> times;
  std::vector<Vec> snapshots;  // v in the moving frame at each record
  std::vector<Norms> norms;
  Mat increments;              // K x steps, coefficients of each noise increment in the mode basis
  int steps = 0;               // steps actually taken
  double dt = 0, epsilon = 0;
  double tau = 0;
  bool stopped = false;
  std::uint64_t seed = 0, path = 0;
};

// h = e^{-dt}; v <- v + (1 - h) (T v - v + C(F(u-hat + v) - F(u-hat))) + eps dW
Vec step_snfe(const FrozenDynamics& dyn, const Vec& v, double dt, const Vec& dW, double eps);
void step_snfe_inplace(const FrozenDynamics& dyn, Vec& v, double dt, const Vec& dW, double eps, Vec& work);

// Norms of a field h given in the lab frame at time t, i.e. weighted by rho(x - c t).
Norms weighted_norms(const Vec& h, double t, const WaveSolution& ws, const SpectralData& sd);
// Same for a field already expressed in the moving frame.
Norms frame_norms(const GridSpec& g, const Vec& w, const Vec& h, const Vec& rho);

// Noise increment of step n in the moving frame: dW(x + c t_n).
void frame_increment(const NoiseModel& noise, double speed, double t, const Vec& coef, Vec& out);

// A path carrying only noise increments (epsilon = 0, no snapshots), with record times
// every `stride` steps, as input for the expansion coefficients.
SimPath draw_increments(const NoiseModel& noise, double dt, int steps, int stride, const RngStream& rng);

// Independent seeds for separate experiments sharing one configured seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t salt);

SimPath run_path(const SimConfig& cfg, const FrozenDynamics& dyn, const NoiseModel& noise, const RngStream& rng);

// Runs fn(i) for i in [0, n) on a pool of worker threads.
void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0);

}  // namespace nf
