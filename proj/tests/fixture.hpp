#pragma once
#include "nf/config.hpp"
#include "nf/phase.hpp"

#include <memory>

namespace nf::test {

// One front at N = 1024 shared by every test case; building it takes a few seconds.
struct Fixture {
  GridSpec g;
  WaveSolution ws;
  SpectralData sd;
  std::unique_ptr<FrozenDynamics> dyn;
  NoiseModel noise;
  Vec w;
};

inline const Fixture& fixture() {
  static const std::unique_ptr<Fixture> f = [] {
    auto f = std::make_unique<Fixture>();
    ExperimentConfig cfg;
    cfg.n_points = 1024;
    f->g = cfg.grid();
    f->ws = solve_wave(cfg.model, f->g, 1e-13);
    f->sd = build_spectral(f->ws, true);
    f->dyn = std::make_unique<FrozenDynamics>(f->ws, f->sd);
    f->noise = make_noise(cfg.noise, f->g, f->sd.rho);
    f->w = quadrature_weights(f->g);
    return f;
  }();
  return *f;
}

}  // namespace nf::test
