#pragma once

#include "nf/grid.hpp"

#include <stdexcept>
#include <string>

namespace nf {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GainParams {
  double gamma = 8.0;
  double theta = 0.6;  // sigmoid threshold
};

struct KernelParams {
  double sigma = 1.0;
};

struct FixedPoints {
  double a1 = 0, a = 0, a2 = 0;
};

// Sigmoid F and derivatives; written through F itself so the tails never overflow.
double gain(const GainParams& p, double u);
double gain_d1(const GainParams& p, double u);
double gain_d2(const GainParams& p, double u);

double kernel(const KernelParams& k, double x);

// Roots a1 < a < a2 of F(x) = x, with the stability conditions checked.
FixedPoints validate_gain(const GainParams& p);

// w * h with w(x) = exp(-|x|/sigma)/(2 sigma) on a uniform grid.
// h is read as the piecewise cubic through neighbouring nodes and continued by its
// boundary values outside [-L, L]; the integral of that function is computed exactly
// by a causal and an anticausal first-order recursion.
class ExpConvolution {
 public:
  ExpConvolution() = default;
  ExpConvolution(const GridSpec& g, double sigma);

  void apply(const Vec& h, Vec& out) const;
  Vec apply(const Vec& h) const {
    Vec out;
    apply(h, out);
    return out;
  }
  Mat matrix() const;

  const GridSpec& grid() const { return grid_; }
  double sigma() const { return sigma_; }

 private:
  GridSpec grid_;
  double sigma_ = 1.0;
  double decay_ = 0.0;
  double right_[4] = {0, 0, 0, 0};  // weights on nodes j-1..j+2 for cell [x_j, x_j+1]
  double left_[4] = {0, 0, 0, 0};
  mutable Vec sl_;
};

Vec conv_exp(const GridSpec& g, const Vec& h, double sigma);

// Slow reference for conv_exp: Gauss-Legendre quadrature cell by cell of the same
// piecewise-cubic integrand plus the analytic tails. O(N^2).
Vec conv_exp_reference(const GridSpec& g, const Vec& h, double sigma);

// Unique root of c x^3 + sigma x^2 - c x - delta sigma on (sqrt(delta), 1].
double decay_rate(double c, double sigma, double delta);
double decay_cubic(double x, double c, double sigma, double delta);

}  // namespace nf
