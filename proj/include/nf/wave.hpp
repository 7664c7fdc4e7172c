#pragma once

#include "nf/grid.hpp"
#include "nf/model.hpp"

namespace nf {

struct ModelParams {
  GainParams gain;
  KernelParams kernel;
};

struct WaveSolution {
  GridSpec grid;
  ModelParams params;
  Vec profile;  // u-hat
  Vec d1, d2, d3;
  double speed = 0.0;
  FixedPoints fixed_points;
  double residual = 0.0;
  int iterations = 0;
};

// Weak inflow condition added to the transport term: -|c|/w_b (u_b - g) at the node
// where characteristics of u_t = c u_x enter. Returns the boundary index, or -1 when c = 0.
int inflow_node(const GridSpec& g, double c);

// Discrete c d/dx of the frozen frame: c D - |c| A - |c|/w_b e_b e_b^T.
class Transport {
 public:
  Transport() = default;
  Transport(const GridSpec& g, double c);

  void apply(const Vec& v, Vec& out) const;
  Mat matrix() const;
  // derivative of apply(v) with respect to c
  Vec dc(const Vec& v) const;

  int node() const { return node_; }
  double penalty() const { return pen_; }

 private:
  GridSpec g_;
  double c_ = 0.0;
  int node_ = -1;
  double pen_ = 0.0;
  Vec winv_;
  mutable Vec t_, d_;
};

// Residual c D u - u + w*F(u) - inflow penalty.
Vec wave_residual(const WaveSolution& ws, const ExpConvolution& conv);

WaveSolution solve_wave(const ModelParams& mp, const GridSpec& g, double tol = 1e-10, int max_iter = 40);

// Level-set speed of a front evolved from a step with the deterministic stepper.
double wave_speed_oracle(const ModelParams& mp, const GridSpec& g, double horizon, double dt = 5e-3);

}  // namespace nf
