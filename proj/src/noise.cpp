#include "nf/noise.hpp"

#include "nf/model.hpp"

#include <Eigen/QR>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace nf {

namespace {

using Block = std::array<std::uint32_t, 4>;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

Block philox(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, ctr[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }
  return ctr;
}

inline double unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t v = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
  return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
}

}  // namespace

void RngStream::normals(std::uint64_t step, int k, double* out) const {
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  for (int p = 0; 2 * p < k; ++p) {
    const Block r = philox({static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(step),
                            static_cast<std::uint32_t>(step >> 32), static_cast<std::uint32_t>(path_)},
                           key);
    const double u1 = unit(r[0], r[1]), u2 = unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    out[2 * p] = rad * std::cos(ang);
    if (2 * p + 1 < k) out[2 * p + 1] = rad * std::sin(ang);
  }
}

void NoiseModel::raw_basis(double s, Mat& out) const {
  const int n = grid.n_points, k = rank();
  out.resize(n, k);
  const double lam2 = spec.envelope * spec.envelope;
  for (int i = 0; i < n; ++i) {
    const double y = grid.x(i) + s;
    const double env = std::exp(-y * y / (2.0 * lam2));
    const std::complex<double> z = std::polar(1.0, base_freq * y);
    std::complex<double> p = 1.0;
    out(i, 0) = env;
    for (int m = 1; m < k; ++m) {
      if (m % 2 == 1) p *= z;
      out(i, m) = env * (m % 2 == 1 ? p.real() : p.imag());
    }
  }
}

void NoiseModel::synthesize(double s, const Vec& b, Vec& out) const {
  const int n = grid.n_points, k = rank();
  const Vec a = coef * b;
  const int jmax = k / 2;  // highest harmonic index
  // complex Horner coefficients c_j = a_cos - i a_sin
  std::array<std::complex<double>, 64> cj{};
  for (int m = 1; m < k; ++m) {
    const int j = (m + 1) / 2;
    if (m % 2 == 1) cj[j] += a[m];
    else cj[j] -= std::complex<double>(0.0, a[m]);
  }
  const double lam2 = spec.envelope * spec.envelope;
  const std::complex<double> rot = std::polar(1.0, base_freq * s);
  // env(x_i + s) = env(x_i) exp(-x_i s / lam2) exp(-s^2 / (2 lam2)); the middle factor is geometric in i
  const double q = std::exp(-grid.spacing * s / lam2);
  double g = std::exp(-grid.x(0) * s / lam2 - s * s / (2.0 * lam2));
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = std::complex<double>(cos0[i], sin0[i]) * rot;
    std::complex<double> acc = cj[jmax];
    for (int j = jmax - 1; j >= 1; --j) acc = acc * z + cj[j];
    acc *= z;
    out[i] = env0[i] * g * (a[0] + acc.real());
    g *= q;
  }
}

Vec NoiseModel::pairings(double s, const Vec& g) const {
  Mat raw;
  raw_basis(s, raw);
  const Vec wg = quadrature_weights(grid).cwiseProduct(g);
  return coef.transpose() * (raw.transpose() * wg);
}

NoiseModel make_noise(const NoiseSpec& spec, const GridSpec& g, const Vec& rho) {
  if (spec.rank < 1 || spec.rank > 100 || !(spec.corr_length > 0) || !(spec.envelope > 0))
    throw ModelError("noise spec out of range");
  NoiseModel nm;
  nm.grid = g;
  nm.spec = spec;
  const int k = spec.rank;
  const int jmax = k / 2;
  nm.base_freq = jmax > 0 ? 2.0 * std::numbers::pi / spec.corr_length / jmax : 0.0;
  nm.lambda.resize(k);
  for (int i = 0; i < k; ++i) nm.lambda[i] = spec.amplitude * std::pow(2.0, -spec.decay_exponent * i);

  const int n = g.n_points;
  const double lam2 = spec.envelope * spec.envelope;
  nm.env0.resize(n);
  nm.cos0.resize(n);
  nm.sin0.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.x(i);
    nm.env0[i] = std::exp(-x * x / (2.0 * lam2));
    nm.cos0[i] = std::cos(nm.base_freq * x);
    nm.sin0[i] = std::sin(nm.base_freq * x);
  }

  Mat raw;
  nm.raw_basis(0.0, raw);
  const Vec w = quadrature_weights(g);
  const Mat scaled = w.cwiseSqrt().asDiagonal() * raw;
  Eigen::HouseholderQR<Mat> qr(scaled);
  const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const double r00 = std::abs(r(0, 0));
  for (int i = 0; i < k; ++i)
    if (!(std::abs(r(i, i)) > 1e-10 * r00)) throw ModelError("mode set degenerate");
  nm.coef = r.triangularView<Eigen::Upper>().solve(Mat::Identity(k, k));
  nm.modes = raw * nm.coef;
  nm.gram_error = (nm.modes.transpose() * w.asDiagonal() * nm.modes - Mat::Identity(k, k)).cwiseAbs().maxCoeff();

  for (int i = 0; i < k; ++i) {
    const Vec m = nm.modes.col(i);
    const Vec mx = diff(g, m);
    const double l2 = nm.lambda[i] * nm.lambda[i];
    nm.trace_l2 += l2 * inner(w, m, m);
    nm.trace_h1 += l2 * (inner(w, m, m) + inner(w, mx, mx));
    if (rho.size() == n) {
      nm.trace_rho += l2 * inner(w.cwiseProduct(rho), m, m);
      const Vec wr = w.cwiseProduct((1.0 + rho.array()).matrix());
      nm.trace_h1_rho += l2 * (inner(wr, m, m) + inner(wr, mx, mx));
    }
  }
  return nm;
}

void increment_coefficients(const NoiseModel& noise, double dt, const RngStream& rng, std::uint64_t step, Vec& b) {
  const int k = noise.rank();
  b.resize(k);
  rng.normals(step, k, b.data());
  b = b.cwiseProduct(noise.lambda) * std::sqrt(dt);
}

Vec sample_increment(const NoiseModel& noise, double dt, RngStream& rng) {
  Vec b;
  increment_coefficients(noise, dt, rng, rng.next_step(), b);
  return noise.modes * b;
}

double pair_quadratic(const NoiseModel& noise, const Vec& g) {
  const Vec w = quadrature_weights(noise.grid);
  const Vec p = noise.modes.transpose() * w.cwiseProduct(g);
  return p.cwiseProduct(noise.lambda).squaredNorm();
}

}  // namespace nf
