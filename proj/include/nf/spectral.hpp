#pragma once

#include "nf/wave.hpp"

#include <string>
#include <vector>

namespace nf {

enum class OperatorKind { LSharp, LSharpAdjoint };

struct OperatorMatrix {
  Mat entries;
  OperatorKind kind = OperatorKind::LSharp;
};

// L# = -I + c D + C diag(F'(u-hat)) with the inflow penalty; the adjoint is the
// transpose taken in the quadrature inner product, W^{-1} L#^T W.
OperatorMatrix assemble_operator(const WaveSolution& ws, OperatorKind kind);

struct AdjointSolution {
  Vec psi;
  Vec phi;            // w * psi
  double sigma_min = 0;  // |L#^T n| for the unit null vector n
  double sigma_2 = 0;    // smallest singular value of the bordered operator
  double residual = 0;   // |L#* psi| / |psi| in the quadrature norm
};

AdjointSolution solve_adjoint(const WaveSolution& ws);

// rho = psi / u-hat_x where both are resolved (above `floor` times their maxima);
// continued by the boundary values of that window elsewhere.
struct Density {
  Vec rho;
  int lo = 0, hi = 0;  // inclusive window of nodes where rho is computed directly
};
Density make_density(const WaveSolution& ws, const Vec& psi, double floor = 1e-10);

// kappa = -(largest eigenvalue of the symmetrised rho-weighted form on the
// complement of u-hat_x). Positive kappa means a spectral gap on the grid.
double estimate_gap(const OperatorMatrix& op, const WaveSolution& ws, const Vec& psi, const Vec& rho);

struct AssumptionConstants {
  double l_rho = 0;
  double k_rho = 0;
  double m_bound = 0;
  double max_rho_x_ratio = 0;  // max |rho_x| / rho
  bool rho_x_ok = false;
};
AssumptionConstants assumption_constants(const Vec& rho, const WaveSolution& ws);

struct SignReport {
  bool uxx_single_change = false;
  int uxx_last_positive = -1, uxx_first_negative = -1;
  bool phix_single_change = false;
  int phix_last_positive = -1, phix_first_negative = -1;
  bool psix_single_change = false;
  int psix_last_positive = -1, psix_first_negative = -1;
  bool phi_positive = false;
};
SignReport check_sign_structure(const WaveSolution& ws, const Vec& psi, const Vec& phi, double tol = 1e-10);

struct TailFit {
  double rate = 0;  // d/dx log f
  double intercept = 0;
  int samples = 0;
};
TailFit tail_rate_fit(const GridSpec& g, const Vec& f, double x_lo, double x_hi);

struct SpectralData {
  Vec psi, phi, rho;
  Vec psi_x;
  int rho_lo = 0, rho_hi = 0;
  double gap = 0;
  double l_rho = 0, k_rho = 0, m_bound = 0;
  bool rho_x_ok = false;
  double adjoint_residual = 0, sigma_min = 0, sigma_2 = 0;
};

SpectralData build_spectral(const WaveSolution& ws, bool with_gap = true);

}  // namespace nf
