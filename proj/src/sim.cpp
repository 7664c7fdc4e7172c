#include "nf/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace nf {

FrozenDynamics::FrozenDynamics(const WaveSolution& ws, const SpectralData& sd)
    : ws_(&ws), sd_(&sd), conv_(ws.grid, ws.params.kernel.sigma), tr_(ws.grid, ws.speed) {
  const int n = ws.grid.n_points;
  w_ = quadrature_weights(ws.grid);
  fu_.resize(n);
  fp1_.resize(n);
  fp2_.resize(n);
  for (int i = 0; i < n; ++i) {
    fu_[i] = gain(ws.params.gain, ws.profile[i]);
    fp1_[i] = gain_d1(ws.params.gain, ws.profile[i]);
    fp2_[i] = gain_d2(ws.params.gain, ws.profile[i]);
  }
  if (sd.psi.size() == n) {
    const Vec wpsi = w_.cwiseProduct(sd.psi);
    pair_second_ = fp2_.cwiseProduct(conv_.matrix().transpose() * wpsi);
  }
}

void FrozenDynamics::linear(const Vec& v, Vec& out) const {
  a_ = fp1_.cwiseProduct(v);
  conv_.apply(a_, b_);
  tr_.apply(v, out);
  out += b_ - v;
}

void FrozenDynamics::full(const Vec& v, Vec& out) const {
  const int n = static_cast<int>(v.size());
  a_.resize(n);
  const GainParams& gp = ws_->params.gain;
  for (int i = 0; i < n; ++i) a_[i] = gain(gp, ws_->profile[i] + v[i]) - fu_[i];
  conv_.apply(a_, b_);
  tr_.apply(v, out);
  out += b_ - v;
}

void FrozenDynamics::second(const Vec& a, Vec& out) const {
  a_ = fp2_.cwiseProduct(a);
  conv_.apply(a_, out);
}

double FrozenDynamics::second_pairing(const Vec& a) const { return pair_second_.dot(a); }

void step_snfe_inplace(const FrozenDynamics& dyn, Vec& v, double dt, const Vec& dW, double eps, Vec& work) {
  const double h = -std::expm1(-dt);
  dyn.full(v, work);
  v += h * work;
  if (eps != 0.0) v += eps * dW;
  if (!v.allFinite()) throw SimError("blow-up");
}

Vec step_snfe(const FrozenDynamics& dyn, const Vec& v, double dt, const Vec& dW, double eps) {
  Vec out = v, work;
  step_snfe_inplace(dyn, out, dt, dW, eps, work);
  return out;
}

Norms frame_norms(const GridSpec& g, const Vec& w, const Vec& h, const Vec& rho) {
  Vec hx;
  diff(g, h, hx);
  double a = 0, b = 0, c = 0;
  for (int i = 0; i < h.size(); ++i) {
    const double s = h[i] * h[i];
    const double sx = hx[i] * hx[i];
    a += w[i] * s;
    b += w[i] * rho[i] * s;
    c += w[i] * (1.0 + rho[i]) * (s + sx);
  }
  return {std::sqrt(a), std::sqrt(b), std::sqrt(c)};
}

Norms weighted_norms(const Vec& h, double t, const WaveSolution& ws, const SpectralData& sd) {
  const Vec rho_t = shift(ws.grid, sd.rho, ws.speed * t);
  return frame_norms(ws.grid, quadrature_weights(ws.grid), h, rho_t);
}

void frame_increment(const NoiseModel& noise, double speed, double t, const Vec& coef, Vec& out) {
  noise.synthesize(speed * t, coef, out);
}

SimPath run_path(const SimConfig& cfg, const FrozenDynamics& dyn, const NoiseModel& noise, const RngStream& rng) {
  if (!(cfg.dt > 0) || !(cfg.horizon >= cfg.dt) || cfg.epsilon < 0 || cfg.record_stride < 1)
    throw SimError("invalid simulation config");
  const GridSpec& g = dyn.grid();
  const int n = g.n_points;
  const int steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
  const double speed = dyn.wave().speed;
  const Vec& rho = dyn.spectral().rho;
  const Vec& w = dyn.weights();
  const double threshold = cfg.epsilon > 0 ? std::pow(cfg.epsilon, 1.0 - cfg.q_exponent) : INFINITY;

  SimPath p;
  p.dt = cfg.dt;
  p.epsilon = cfg.epsilon;
  p.seed = rng.seed();
  p.path = rng.path();
  p.tau = steps * cfg.dt;
  p.increments.resize(noise.rank(), steps);

  Vec v = cfg.initial_eta.size() == n ? Vec(cfg.epsilon * cfg.initial_eta) : Vec::Zero(n);
  Vec work, dw, b;
  auto record = [&](int k, const Norms& nm) {
    p.times.push_back(k * cfg.dt);
    p.snapshots.push_back(v);
    p.norms.push_back(nm);
  };
  Norms nm = frame_norms(g, w, v, rho);
  record(0, nm);
  if (nm.h1_rho >= threshold) {
    p.stopped = true;
    p.tau = 0;
    if (cfg.stop_at_tau) {
      p.increments.resize(noise.rank(), 0);
      return p;
    }
  }
  for (int k = 0; k < steps; ++k) {
    increment_coefficients(noise, cfg.dt, rng, static_cast<std::uint64_t>(k), b);
    p.increments.col(k) = b;
    frame_increment(noise, speed, k * cfg.dt, b, dw);
    step_snfe_inplace(dyn, v, cfg.dt, dw, cfg.epsilon, work);
    p.steps = k + 1;
    nm = frame_norms(g, w, v, rho);
    const bool hit = !p.stopped && nm.h1_rho >= threshold;
    if (hit) {
      p.stopped = true;
      p.tau = (k + 1) * cfg.dt;
    }
    if ((k + 1) % cfg.record_stride == 0 || k + 1 == steps || (hit && cfg.stop_at_tau)) record(k + 1, nm);
    if (hit && cfg.stop_at_tau) break;
  }
  p.increments.conservativeResize(Eigen::NoChange, p.steps);
  return p;
}

SimPath draw_increments(const NoiseModel& noise, double dt, int steps, int stride, const RngStream& rng) {
  SimPath p;
  p.dt = dt;
  p.steps = steps;
  p.seed = rng.seed();
  p.path = rng.path();
  p.tau = steps * dt;
  p.increments.resize(noise.rank(), steps);
  Vec b;
  for (int k = 0; k < steps; ++k) {
    increment_coefficients(noise, dt, rng, static_cast<std::uint64_t>(k), b);
    p.increments.col(k) = b;
  }
  for (int k = 0; k <= steps; k += stride) p.times.push_back(k * dt);
  if (steps % stride != 0) p.times.push_back(steps * dt);
  return p;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void parallel_for(int n, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace nf
