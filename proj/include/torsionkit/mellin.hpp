#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "torsionkit/spectral.hpp"

namespace torsionkit {

// Laurent data of the Mellin transform I(s) = int_0^inf t^{s-1} h(t) dt at s = 0:
// I(s) = pole / s + c0 + O(s).
struct FinitePart {
  cplx pole{};
  cplx c0{};
  double error = 0.0;
  // Pieces of c0: int_0^1 R(t) dt/t, int_1^inf h(t) dt/t, sum_{p != 0} a_p / p.
  cplx remainder_integral{}, tail_integral{}, power_sum{};
};

struct ZetaResult {
  cplx value_at_0{};
  cplx derivative_at_0{};
  cplx finite_part{};
  double error_bound = 0.0;
  std::vector<std::pair<double, cplx>> residues;  // (pole -p, a_p) of Gamma(s) zeta(s)
  std::function<cplx(cplx)> evaluator;
};

FinitePart finite_part_at_zero(const HeatTraceModel& h, double tol);

// t below which int_0^t |R(u)| u^{sigma-1} du < budget (remainder ~ t^K).
double remainder_cutoff(const HeatTraceModel& h, double sigma, double budget);
// T with int_T^inf C t^{sigma-1} exp(-eps t) dt < budget.
double decay_cutoff(double C, double eps, double sigma, double budget);
// Decay constant of h, estimated from h(1), h(2) when the model carries none.
double decay_bound(const HeatTraceModel& h);
ZetaResult continue_zeta(const HeatTraceModel& h, double tol);

// I(s) for Re s > -remainder_order, away from the stored poles.
Estimate<cplx> mellin_transform(const HeatTraceModel& h, cplx s, double tol);
Estimate<cplx> zeta_value(const HeatTraceModel& h, cplx s, double tol);
// (1 / 2 pi i) times the contour integral of I(s) on |s + power| = radius.
cplx contour_residue(const HeatTraceModel& h, double power, double radius, double tol, int nodes = 64);

struct LogDetResult {
  double value = 0.0;
  double error = 0.0;
  cplx zeta_at_0{};
};
LogDetResult log_det(const Spectrum& spec, double tol);

struct TorsionResult {
  double value = 0.0;             // (1/2) d/ds zeta(s; (-1)^Q Q) at 0
  double via_determinants = 0.0;  // -(1/2) sum_q (-1)^q q log det Delta_q
  double error = 0.0;
  bool routes_agree = false;
};
TorsionResult log_torsion(const GradedSpectrum& spec, double tol);

Estimate<double> eta_invariant(const GradedSpectrum& spec, double tol);

// [h(t)]_{t^power} with the Tr' shift at power 0; 0 for absent powers.
cplx variation_coefficient(const HeatTraceModel& h, double power);
// d eta / du = -(2 / Gamma(1/2)) [Tr (dB/du) exp(-t B^2)]_{t^{-1/2}}.
double eta_variation_rate(cplx coefficient);

}  // namespace torsionkit
