#pragma once

#include <Eigen/Dense>

#include <array>

namespace nf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class BoundaryPolicy { ConstantExtension };

struct GridSpec {
  double half_length = 40.0;
  int n_points = 2048;
  double spacing = 0.0;
  BoundaryPolicy boundary = BoundaryPolicy::ConstantExtension;

  static GridSpec make(double half_length, int n_points);

  double x(int i) const { return -half_length + i * spacing; }
  Vec nodes() const;
  int size() const { return n_points; }
};

// Diagonal norm of the 2-4 summation-by-parts first derivative. Used as the
// quadrature rule for every inner product so that discrete adjoints are exact.
Vec quadrature_weights(const GridSpec& g);

// Apply the SBP first-derivative operator (4th order interior, 2nd order closures).
Vec diff(const GridSpec& g, const Vec& f);
void diff(const GridSpec& g, const Vec& f, Vec& out);
Mat diff_matrix(const GridSpec& g);

// W^{-1} T^T T f / 60 with T the undivided third difference. In the interior this is
// the sixth difference / (60 dx): subtracting |c| times it from c D upwinds the transport
// term at fifth order and damps the sawtooth modes centred differences leave undamped.
void dissipation(const GridSpec& g, const Vec& f, Vec& out);
Mat dissipation_matrix(const GridSpec& g);

inline double inner(const Vec& w, const Vec& a, const Vec& b) {
  return (w.array() * a.array() * b.array()).sum();
}

// Samples of f(x - s) on the grid, f continued by its boundary values.
// Degree-7 Lagrange interpolation; the stencil is identical for every node.
Vec shift(const GridSpec& g, const Vec& f, double s);
void shift(const GridSpec& g, const Vec& f, double s, Vec& out);

// Interpolation stencil at an arbitrary point: first index and 8 weights.
struct Stencil {
  int first = 0;
  std::array<double, 8> w{};
};
Stencil interp_stencil(const GridSpec& g, double x);
double interp(const GridSpec& g, const Vec& f, double x);

}  // namespace nf
