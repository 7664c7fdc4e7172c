#include "fixture.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace nf;

TEST_CASE("modes are orthonormal in the quadrature inner product") {
  const auto& f = test::fixture();
  CHECK(f.noise.gram_error < 1e-8);
  const Mat gram = f.noise.modes.transpose() * f.w.asDiagonal() * f.noise.modes;
  CHECK((gram - Mat::Identity(f.noise.rank(), f.noise.rank())).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::isfinite(f.noise.trace_h1_rho));
  CHECK(f.noise.trace_l2 > 0);
}

TEST_CASE("unit-amplitude default noise") {
  const auto& f = test::fixture();
  const NoiseModel n = make_noise(NoiseSpec{}, f.g, f.sd.rho);
  CHECK(n.gram_error < 1e-8);
  CHECK(n.lambda[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(n.trace_l2));
}

TEST_CASE("quadratic form of Q") {
  const auto& f = test::fixture();
  CHECK(pair_quadratic(f.noise, Vec::Zero(f.g.n_points)) == 0.0);
  for (int j : {0, 5, 15}) {
    const Vec m = f.noise.modes.col(j);
    CHECK(pair_quadratic(f.noise, m) == doctest::Approx(f.noise.lambda[j] * f.noise.lambda[j]).epsilon(1e-10));
  }
  // rank one
  NoiseSpec one;
  one.rank = 1;
  const NoiseModel n1 = make_noise(one, f.g, f.sd.rho);
  const Vec m = n1.modes.col(0);
  CHECK(pair_quadratic(n1, m) == doctest::Approx(n1.lambda[0] * n1.lambda[0]).epsilon(1e-12));
  // orthogonal to every mode
  Vec g = f.sd.psi;
  for (int k = 0; k < f.noise.rank(); ++k) g -= inner(f.w, g, f.noise.modes.col(k)) * f.noise.modes.col(k);
  CHECK(pair_quadratic(f.noise, g) < 1e-24 * pair_quadratic(f.noise, f.sd.psi) + 1e-28);
}

TEST_CASE("fixed (seed, path, step) regenerates the same increment") {
  const auto& f = test::fixture();
  Vec a, b, c;
  increment_coefficients(f.noise, 1e-3, RngStream(7, 3), 42, a);
  increment_coefficients(f.noise, 1e-3, RngStream(7, 3), 42, b);
  increment_coefficients(f.noise, 1e-3, RngStream(7, 4), 42, c);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  CHECK((a - c).norm() > 0);
  RngStream r1(7, 3), r2(7, 3);
  const Vec x = sample_increment(f.noise, 1e-3, r1);
  const Vec y = sample_increment(f.noise, 1e-3, r2);
  CHECK(std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0);
  CHECK((sample_increment(f.noise, 1e-3, r1) - x).norm() > 0);
}

TEST_CASE("increments scale with sqrt(dt)") {
  const auto& f = test::fixture();
  std::vector<double> dts, norms;
  for (double dt : {1e-1, 1e-2, 1e-3, 1e-4}) {
    RngStream rng(11, 0);
    double s = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec d = sample_increment(f.noise, dt, rng);
      s += std::sqrt(inner(f.w, d, d)) / 1000;
    }
    dts.push_back(std::log(dt));
    norms.push_back(std::log(s));
  }
  const double slope = (norms.back() - norms.front()) / (dts.back() - dts.front());
  CHECK(slope == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("variance of a pairing matches dt <g, Q g>") {
  const auto& f = test::fixture();
  const Vec g = f.sd.psi;
  const double dt = 1e-2;
  const int n = 10000;
  Vec b, field;
  double s = 0, s2 = 0;
  RngStream rng(5, 9);
  for (int i = 0; i < n; ++i) {
    increment_coefficients(f.noise, dt, rng, i, b);
    f.noise.synthesize(0.0, b, field);
    const double p = inner(f.w, g, field);
    s += p;
    s2 += p * p;
  }
  const double var = (s2 - s * s / n) / (n - 1);
  const double exact = dt * pair_quadratic(f.noise, g);
  // sample variance has relative standard error sqrt(2/n) = 1.4%
  CHECK(std::abs(var / exact - 1) < 0.05);
}

TEST_CASE("synthesized modes agree with the stored basis") {
  const auto& f = test::fixture();
  Vec b = Vec::Zero(f.noise.rank()), out;
  b[3] = 1;
  f.noise.synthesize(0.0, b, out);
  CHECK((out - f.noise.modes.col(3)).cwiseAbs().maxCoeff() < 1e-12);
  Mat raw;
  f.noise.raw_basis(1.7, raw);
  b.setRandom();
  f.noise.synthesize(1.7, b, out);
  CHECK((out - raw * f.noise.coef * b).cwiseAbs().maxCoeff() < 1e-12);
}
