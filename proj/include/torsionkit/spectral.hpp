#pragma once

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "torsionkit/numerics.hpp"

namespace torsionkit {

struct Eigenvalue {
  double lambda = 0.0;
  long mult = 1;
};

// Infinite lattice spectrum {|m + shift|^2 / radius^2 : m in Z^d}, d = shifts.size()
// (1 or 2), each eigenvalue with multiplicity mult. A zero mode (all shifts
// integral) is excluded from traces. For d = 1 a nonzero sign marks the family
// as the square of B with eigenvalues sign * (m + shift) / radius.
struct LatticeFamily {
  double radius = 1.0;
  std::vector<double> shifts;
  long mult = 1;
  int sign = 0;

  long zero_modes() const;
  double smallest_nonzero() const;
  void validate() const;
};

struct Spectrum {
  std::vector<Eigenvalue> entries;  // positive, ascending
  std::vector<LatticeFamily> lattices;
  long kernel_dim = 0;  // zero eigenvalues of the finite part

  static Spectrum finite(std::vector<Eigenvalue> entries, long kernel_dim = 0);
  static Spectrum circle(double radius, double alpha);
  static Spectrum torus(double radius, double alpha, double beta);

  bool is_finite() const { return lattices.empty(); }
  long total_kernel() const;
  double smallest_nonzero() const;
  void validate() const;
};

// Spectra of a graded operator, degrees 0..r. signs, when present, hold one
// sign per finite entry of each degree (lattice signs live on the family).
struct GradedSpectrum {
  std::vector<Spectrum> per_degree;
  std::optional<std::vector<std::vector<int>>> signs;

  // Lambda^0 + Lambda^1 on a circle of radius r, flat bundle with holonomy alpha.
  static GradedSpectrum circle_complex(double radius, double alpha);
  // Degrees 0, 1, 2 on the square torus with multiplicities 1, 2, 1.
  static GradedSpectrum torus_complex(double radius, double alpha, double beta);
  // B = (-i d/dtheta + a) / r on the circle; one degree holding B^2 with signs.
  static GradedSpectrum dirac_circle(double radius, double a);

  int top_degree() const { return static_cast<int>(per_degree.size()) - 1; }
  bool has_signs() const;
  void validate() const;
};

struct BigradedEntry {
  double mu1 = 0.0, mu2 = 0.0;
  long mult = 1;
};

// Finite bigraded spectrum of t1 * Delta_1 + t2 * Delta_2.
struct BigradedSpectrum {
  std::map<std::pair<int, int>, std::vector<BigradedEntry>> per_bidegree;
  long kernel = 0;

  // Product of two finite graded spectra (kernels of the factors included as
  // zero eigenvalues of the respective direction).
  static BigradedSpectrum product(const GradedSpectrum& a, const GradedSpectrum& b);
  cplx trace(const std::function<double(int, int)>& weight, double t1, double t2) const;
};

using DegreeWeight = std::function<double(int)>;
DegreeWeight unit_weight();
DegreeWeight euler_weight();    // (-1)^q
DegreeWeight torsion_weight();  // (-1)^q q

// Circle theta sums, tau = t / r^2, alpha reduced to [0, 1).
// theta(r, a, t) = sum_k exp(-t ((k + a)/r)^2)
Estimate<double> theta_direct(double radius, double alpha, double t, double tol);
Estimate<cplx> theta_dual(double radius, double alpha, double t, double tol);
Estimate<double> theta(double radius, double alpha, double t, double tol);
// theta - r sqrt(pi/t), via the dual sum without its m = 0 term.
Estimate<double> theta_remainder(double radius, double alpha, double t, double tol);
// sum_k exp(i k phi) exp(-t ((k + a)/r)^2)
Estimate<cplx> twisted_theta(double radius, double alpha, double phi, double t, double tol);
// sum_k ((k + a)/r) exp(-t ((k + a)/r)^2)
Estimate<double> theta_moment(double radius, double alpha, double t, double tol);

// K with sum_{|k| > K} exp(-t ((k + a)/r)^2) < tol.
int truncate_with_tail_bound(const LatticeFamily& family, double t, double tol);
double direct_tail_bound(double radius, double alpha, double t, int K);
cplx poisson_dual_eval(double radius, double alpha, double t, double tol);

// Tr' sum_q w(q) exp(-t L_q); kernel excluded.
Estimate<cplx> eval_weighted_trace(const GradedSpectrum& spec, const DegreeWeight& weight,
                                   double t, double tol);
Estimate<cplx> eval_trace(const Spectrum& spec, double t, double tol);

struct ExpansionTerm {
  double power = 0.0;
  cplx coeff{};
};

// Small-t data of Tr Q exp(-tL): h(t) ~ sum a_p t^p; the Tr' function has
// t^0 coefficient a_0 - kernel_trace.
struct AdmissibleExpansion {
  std::vector<ExpansionTerm> terms;
  double decay_rate = 0.0;
  cplx kernel_trace{};

  cplx coefficient(double power) const;
  cplx effective_coefficient(double power) const;
  void add(double power, cplx coeff);
  void validate() const;
};

// Evaluable Tr' heat trace with its expansion. remainder, when set, returns
// h(t) - sum of effective terms without cancellation for t <= 1.
struct HeatTraceModel {
  std::function<cplx(double)> evaluator;
  std::function<cplx(double)> remainder;
  AdmissibleExpansion expansion;
  double decay_constant = 0.0;     // |h(t)| <= C exp(-eps t) for t >= 1
  double remainder_order = 1.0;    // remainder = O(t^K) as t -> 0
  bool identically_zero = false;

  cplx operator()(double t) const { return evaluator(t); }
  cplx eval_remainder(double t) const;
  double max_power() const;

  static HeatTraceModel zero();
  static HeatTraceModel exponential(double rate, int terms);  // exp(-rate t)
  static HeatTraceModel combine(const std::vector<std::pair<cplx, HeatTraceModel>>& parts);
};

HeatTraceModel trace_model(const Spectrum& spec);
HeatTraceModel trace_model(const GradedSpectrum& spec, const DegreeWeight& weight);
// Tr B exp(-t B^2) for a signed spectrum (degree 0 of spec).
HeatTraceModel eta_trace_model(const GradedSpectrum& spec);

}  // namespace torsionkit
