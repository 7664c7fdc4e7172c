#include "nf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nf {

namespace {

// boundary block of the 2-4 SBP operator (rows 0..3, columns 0..5), times dx
constexpr double kBlock[4][6] = {
    {-24.0 / 17, 59.0 / 34, -4.0 / 17, -3.0 / 34, 0, 0},
    {-0.5, 0, 0.5, 0, 0, 0},
    {4.0 / 43, -59.0 / 86, 0, 59.0 / 86, -4.0 / 43, 0},
    {3.0 / 98, 0, -59.0 / 98, 0, 32.0 / 49, -4.0 / 49},
};
constexpr double kNorm[4] = {17.0 / 48, 59.0 / 48, 43.0 / 48, 49.0 / 48};

std::array<double, 8> lagrange8(double t) {
  std::array<double, 8> w{};
  for (int k = 0; k < 8; ++k) {
    double num = 1.0, den = 1.0;
    const double ok = k - 3;
    for (int m = 0; m < 8; ++m) {
      if (m == k) continue;
      const double om = m - 3;
      num *= t - om;
      den *= ok - om;
    }
    w[k] = num / den;
  }
  return w;
}

inline int clampi(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace

GridSpec GridSpec::make(double half_length, int n_points) {
  if (!(half_length > 0) || n_points < 16)
    throw std::invalid_argument("grid needs half_length > 0 and at least 16 points");
  GridSpec g;
  g.half_length = half_length;
  g.n_points = n_points;
  g.spacing = 2.0 * half_length / (n_points - 1);
  return g;
}

Vec GridSpec::nodes() const {
  Vec x(n_points);
  for (int i = 0; i < n_points; ++i) x[i] = this->x(i);
  return x;
}

Vec quadrature_weights(const GridSpec& g) {
  const int n = g.n_points;
  Vec w = Vec::Constant(n, g.spacing);
  for (int i = 0; i < 4; ++i) {
    w[i] = kNorm[i] * g.spacing;
    w[n - 1 - i] = kNorm[i] * g.spacing;
  }
  return w;
}

void diff(const GridSpec& g, const Vec& f, Vec& out) {
  const int n = g.n_points;
  const double s = 1.0 / g.spacing;
  out.resize(n);
  for (int i = 0; i < 4; ++i) {
    double a = 0.0, b = 0.0;
    for (int j = 0; j < 6; ++j) {
      a += kBlock[i][j] * f[j];
      b += kBlock[i][j] * f[n - 1 - j];
    }
    out[i] = a * s;
    out[n - 1 - i] = -b * s;
  }
  const double c1 = 2.0 / 3.0, c2 = 1.0 / 12.0;
  for (int i = 4; i < n - 4; ++i)
    out[i] = (c1 * (f[i + 1] - f[i - 1]) - c2 * (f[i + 2] - f[i - 2])) * s;
}

Vec diff(const GridSpec& g, const Vec& f) {
  Vec out;
  diff(g, f, out);
  return out;
}

Mat diff_matrix(const GridSpec& g) {
  const int n = g.n_points;
  const double s = 1.0 / g.spacing;
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) {
      d(i, j) = kBlock[i][j] * s;
      d(n - 1 - i, n - 1 - j) = -kBlock[i][j] * s;
    }
  for (int i = 4; i < n - 4; ++i) {
    d(i, i - 2) = s / 12.0;
    d(i, i - 1) = -2.0 * s / 3.0;
    d(i, i + 1) = 2.0 * s / 3.0;
    d(i, i + 2) = -s / 12.0;
  }
  return d;
}

void dissipation(const GridSpec& g, const Vec& f, Vec& out) {
  const int n = g.n_points;
  Vec t(n - 3);
  for (int i = 0; i < n - 3; ++i) t[i] = -f[i] + 3.0 * f[i + 1] - 3.0 * f[i + 2] + f[i + 3];
  out.setZero(n);
  for (int i = 0; i < n - 3; ++i) {
    out[i] -= t[i];
    out[i + 1] += 3.0 * t[i];
    out[i + 2] -= 3.0 * t[i];
    out[i + 3] += t[i];
  }
  const Vec w = quadrature_weights(g);
  out = out.cwiseQuotient(w) / 60.0;
}

Mat dissipation_matrix(const GridSpec& g) {
  const int n = g.n_points;
  constexpr double t[4] = {-1, 3, -3, 1};
  Mat m = Mat::Zero(n, n);
  for (int r = 0; r < n - 3; ++r)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) m(r + a, r + b) += t[a] * t[b];
  const Vec w = quadrature_weights(g);
  return w.cwiseInverse().asDiagonal() * m / 60.0;
}

Stencil interp_stencil(const GridSpec& g, double x) {
  const double p = (x + g.half_length) / g.spacing;
  const double j = std::floor(p);
  Stencil st;
  st.first = static_cast<int>(j) - 3;
  st.w = lagrange8(p - j);
  return st;
}

double interp(const GridSpec& g, const Vec& f, double x) {
  const Stencil st = interp_stencil(g, x);
  double acc = 0.0;
  for (int k = 0; k < 8; ++k) acc += st.w[k] * f[clampi(st.first + k, g.n_points)];
  return acc;
}

void shift(const GridSpec& g, const Vec& f, double s, Vec& out) {
  const int n = g.n_points;
  const double p = -s / g.spacing;
  const double j = std::floor(p);
  const int off = static_cast<int>(j) - 3;
  const auto w = lagrange8(p - j);
  out.resize(n);
  const int lo = std::max(0, -off), hi = std::min(n, n - 7 - off);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i >= lo && i < hi) {
      const double* fp = f.data() + i + off;
      for (int k = 0; k < 8; ++k) acc += w[k] * fp[k];
    } else {
      for (int k = 0; k < 8; ++k) acc += w[k] * f[clampi(i + off + k, n)];
    }
    out[i] = acc;
  }
}

Vec shift(const GridSpec& g, const Vec& f, double s) {
  Vec out;
  shift(g, f, s, out);
  return out;
}

}  // namespace nf
