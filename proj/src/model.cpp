#include "nf/model.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <vector>

namespace nf {

double gain(const GainParams& p, double u) { return 1.0 / (1.0 + std::exp(-p.gamma * (u - p.theta))); }

double gain_d1(const GainParams& p, double u) {
  const double f = gain(p, u);
  return p.gamma * f * (1.0 - f);
}

double gain_d2(const GainParams& p, double u) {
  const double f = gain(p, u);
  return p.gamma * p.gamma * f * (1.0 - f) * (1.0 - 2.0 * f);
}

double kernel(const KernelParams& k, double x) { return std::exp(-std::abs(x) / k.sigma) / (2.0 * k.sigma); }

FixedPoints validate_gain(const GainParams& p) {
  if (!(p.gamma > 0) || !(p.theta > 0 && p.theta < 1)) throw ModelError("gain parameters out of range");
  auto g = [&](double x) { return gain(p, x) - x; };
  auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };

  const int m = 20000;
  std::vector<double> roots;
  double xl = 0.0;
  int sl = sgn(g(xl));
  for (int k = 1; k <= m; ++k) {
    const double xr = static_cast<double>(k) / m;
    const int sr = sgn(g(xr));
    if (sr == 0) {
      roots.push_back(xr);
    } else if (sl != 0 && sl != sr) {
      double a = xl, b = xr;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double c = 0.5 * (a + b);
        if (sgn(g(c)) == sl) a = c;
        else b = c;
      }
      roots.push_back(0.5 * (a + b));
    }
    xl = xr;
    sl = sr;
  }
  if (roots.size() != 3) throw ModelError("bistability violated: F(x)-x has " + std::to_string(roots.size()) + " roots");
  FixedPoints fp{roots[0], roots[1], roots[2]};
  if (!(gain_d1(p, fp.a1) < 1 && gain_d1(p, fp.a2) < 1 && gain_d1(p, fp.a) > 1))
    throw ModelError("stability conditions violated");
  return fp;
}

namespace {

// int_0^1 tau^p exp(-beta tau) dtau
double moment(int p, double beta) {
  if (beta < 1.0) {
    double s = 0.0, t = 1.0;
    for (int n = 0; n < 40; ++n) {
      s += t / (n + p + 1);
      t *= -beta / (n + 1);
    }
    return s;
  }
  double m = (1.0 - std::exp(-beta)) / beta;
  for (int q = 1; q <= p; ++q) m = (q * m - std::exp(-beta)) / beta;
  return m;
}

// Lagrange basis on tau = -1, 0, 1, 2
double lagrange4(int k, double t) {
  constexpr double nodes[4] = {-1, 0, 1, 2};
  double v = 1.0;
  for (int j = 0; j < 4; ++j)
    if (j != k) v *= (t - nodes[j]) / (nodes[k] - nodes[j]);
  return v;
}

}  // namespace

ExpConvolution::ExpConvolution(const GridSpec& g, double sigma) : grid_(g), sigma_(sigma) {
  const double beta = g.spacing / sigma;
  decay_ = std::exp(-beta);
  // monomial coefficients of the four basis cubics
  constexpr double coef[4][4] = {
      {0, -1.0 / 3, 1.0 / 2, -1.0 / 6},
      {1, -1.0 / 2, -1, 1.0 / 2},
      {0, 1, 1.0 / 2, -1.0 / 2},
      {0, -1.0 / 6, 0, 1.0 / 6},
  };
  double mom[4];
  for (int p = 0; p < 4; ++p) mom[p] = moment(p, beta);
  const double fac = g.spacing / (2.0 * sigma);
  for (int k = 0; k < 4; ++k) {
    double a = 0.0;
    for (int p = 0; p < 4; ++p) a += coef[k][p] * mom[p];
    right_[k] = fac * a;
  }
  for (int k = 0; k < 4; ++k) left_[k] = right_[3 - k];
}

void ExpConvolution::apply(const Vec& h, Vec& out) const {
  const int n = grid_.n_points;
  out.resize(n);
  sl_.resize(n);
  const double e = decay_;
  const double* f = h.data();
  // causal pass; cell [x_{i-1}, x_i] uses nodes i-2..i+1
  sl_[0] = 0.5 * f[0];
  sl_[1] = e * sl_[0] + left_[0] * f[0] + left_[1] * f[0] + left_[2] * f[1] + left_[3] * f[2];
  for (int i = 2; i < n - 1; ++i)
    sl_[i] = e * sl_[i - 1] + left_[0] * f[i - 2] + left_[1] * f[i - 1] + left_[2] * f[i] + left_[3] * f[i + 1];
  sl_[n - 1] = e * sl_[n - 2] + left_[0] * f[n - 3] + left_[1] * f[n - 2] + left_[2] * f[n - 1] + left_[3] * f[n - 1];
  // anticausal pass; cell [x_i, x_{i+1}] uses nodes i-1..i+2
  double sr = 0.5 * f[n - 1];
  out[n - 1] = sl_[n - 1] + sr;
  sr = e * sr + right_[0] * f[n - 3] + right_[1] * f[n - 2] + right_[2] * f[n - 1] + right_[3] * f[n - 1];
  out[n - 2] = sl_[n - 2] + sr;
  for (int i = n - 3; i >= 1; --i) {
    sr = e * sr + right_[0] * f[i - 1] + right_[1] * f[i] + right_[2] * f[i + 1] + right_[3] * f[i + 2];
    out[i] = sl_[i] + sr;
  }
  sr = e * sr + right_[0] * f[0] + right_[1] * f[0] + right_[2] * f[1] + right_[3] * f[2];
  out[0] = sl_[0] + sr;
}

Mat ExpConvolution::matrix() const {
  const int n = grid_.n_points;
  auto idx = [n](int i) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
  const double e = decay_;
  Mat c = Mat::Zero(n, n);
  // causal part accumulated row by row, then anticausal added in place
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
  row[0] = 0.5;
  c.row(0) = row;
  for (int i = 1; i < n; ++i) {
    row *= e;
    for (int k = 0; k < 4; ++k) row[idx(i - 2 + k)] += left_[k];
    c.row(i) = row;
  }
  row.setZero();
  row[n - 1] = 0.5;
  c.row(n - 1) += row;
  for (int i = n - 2; i >= 0; --i) {
    row *= e;
    for (int k = 0; k < 4; ++k) row[idx(i - 1 + k)] += right_[k];
    c.row(i) += row;
  }
  return c;
}

Vec conv_exp(const GridSpec& g, const Vec& h, double sigma) { return ExpConvolution(g, sigma).apply(h); }

Vec conv_exp_reference(const GridSpec& g, const Vec& h, double sigma) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const int n = g.n_points;
  const double dx = g.spacing;
  auto val = [&](int i) { return h[i < 0 ? 0 : (i >= n ? n - 1 : i)]; };
  // per-cell Gauss points mapped to [0, 1] and the cubic basis values there
  std::vector<double> tau, wt;
  for (double a : Rule::abscissa()) {
    for (double s : {-1.0, 1.0}) {
      if (a == 0.0 && s > 0) continue;
      tau.push_back(0.5 * (1.0 + s * a));
    }
  }
  const auto& ab = Rule::abscissa();
  const auto& ww = Rule::weights();
  for (std::size_t k = 0; k < ab.size(); ++k) {
    for (double s : {-1.0, 1.0}) {
      if (ab[k] == 0.0 && s > 0) continue;
      wt.push_back(0.5 * ww[k]);
    }
  }
  const int q = static_cast<int>(tau.size());
  std::vector<double> basis(4 * q);
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < 4; ++k) basis[4 * j + k] = lagrange4(k, tau[j]);

  // interpolant values at the quadrature points of every cell
  std::vector<double> pv(static_cast<std::size_t>(n - 1) * q), py(pv.size());
  for (int c = 0; c < n - 1; ++c)
    for (int j = 0; j < q; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += basis[4 * j + k] * val(c - 1 + k);
      pv[c * q + j] = s;
      py[c * q + j] = g.x(c) + tau[j] * dx;
    }

  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double xi = g.x(i);
    double acc = 0.5 * h[0] * std::exp(-(xi + g.half_length) / sigma) +
                 0.5 * h[n - 1] * std::exp(-(g.half_length - xi) / sigma);
    for (int c = 0; c < n - 1; ++c) {
      double cell = 0.0;
      for (int j = 0; j < q; ++j)
        cell += wt[j] * std::exp(-std::abs(xi - py[c * q + j]) / sigma) * pv[c * q + j];
      acc += cell * dx / (2.0 * sigma);
    }
    out[i] = acc;
  }
  return out;
}

double decay_cubic(double x, double c, double sigma, double delta) {
  return ((c * x + sigma) * x - c) * x - delta * sigma;
}

double decay_rate(double c, double sigma, double delta) {
  if (!(c >= 0) || !(sigma > 0) || !(delta > 0 && delta < 1)) throw ModelError("decay_rate arguments out of range");
  double lo = std::sqrt(delta), hi = 1.0;
  if (c == 0.0) return lo;
  // f(lo) < 0 < f(hi); bisect until the bracket stops shrinking
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (decay_cubic(mid, c, sigma, delta) < 0) lo = mid;
    else hi = mid;
  }
  const double x = std::abs(decay_cubic(lo, c, sigma, delta)) < std::abs(decay_cubic(hi, c, sigma, delta)) ? lo : hi;
  const double scale = std::max({1.0, c, sigma});
  if (std::abs(decay_cubic(x, c, sigma, delta)) > 1e-10 * scale) throw ModelError("cubic solve failed");
  return x;
}

}  // namespace nf
