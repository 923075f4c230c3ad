#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "torsionkit/numerics.hpp"

namespace torsionkit {

using Mat = Eigen::MatrixXcd;
using Params = std::vector<double>;

// Finite graded complex on E = sum_q E^q, stored as one total differential.
// Basis vectors carry their degree; a tensor product also records bidegrees.
struct GradedComplex {
  std::vector<int> degree;
  std::vector<int> degree1, degree2;  // bidegrees (tensor products only)
  int n1 = 0, n2 = 0;                 // top degrees of the tensor factors
  Mat d;

  int size() const { return static_cast<int>(degree.size()); }
  int top_degree() const;
  std::vector<int> dims() const;
  std::vector<int> indices(int q) const;
  Mat block(int q) const;  // d_q : E^q -> E^{q+1}
  bool is_product() const { return !degree1.empty(); }
  double closure_defect() const;  // |d d| / |d|^2
  void validate() const;

  static GradedComplex from_blocks(const std::vector<Mat>& d_q);
  // d_q = S_{q+1} P_q S_q^{-1} with P_q a partial identity of rank ranks[q]; d d = 0
  // holds up to rounding. Requires ranks[q-1] + ranks[q] <= dims[q].
  static GradedComplex random(const std::vector<int>& dims, const std::vector<int>& ranks, std::uint64_t seed);
  // Ranks chosen so that the complex is acyclic (alternating sum of dims must vanish).
  static GradedComplex random_acyclic(const std::vector<int>& dims, std::uint64_t seed);
  // E1 (x) E2 with d = d1 (x) 1 + (-1)^{Q1} (x) d2.
  static GradedComplex tensor(const GradedComplex& a, const GradedComplex& b);
};

// Smooth family u -> h(u) of Hermitian metrics, block-diagonal by degree, with
// analytic partial derivatives. A product family splits the parameters:
// [0, split) move the first tensor factor, [split, nparams) the second.
struct MetricFamily {
  int nparams = 0;
  std::function<Mat(const Params&)> h;
  std::function<Mat(const Params&, int)> dh;
  Params lower, upper;
  int split = -1;

  static MetricFamily constant(const Mat& h0, int nparams = 1);
  // h = A A^dagger + c I per degree block with A(u) quadratic in u.
  static MetricFamily random(const GradedComplex& c, int nparams, std::uint64_t seed, double spread = 0.4);
  // h(u) = E(u) h0 E(u), E(u) = diag(exp(rate_i u)); one parameter.
  static MetricFamily exponential(const Mat& h0, const std::vector<double>& rates);
  // h(t) = t^{Q - shift} h0 for t > 0 (the scaling curve); one parameter.
  static MetricFamily scaling(const GradedComplex& c, const Mat& h0, double shift = 0.0);
  static MetricFamily product(const MetricFamily& f1, const MetricFamily& f2);

  bool is_product() const { return split >= 0; }
  Mat b(const Params& u, int i) const;  // h^{-1} dh/du_i
  void check_interior(const Params& u, double margin) const;
};

// Hermitian family u -> B(u) for the eta form.
struct HermitianFamily {
  int nparams = 0;
  std::function<Mat(const Params&)> B;
  std::function<Mat(const Params&, int)> dB;
  Params lower, upper;

  static HermitianFamily random(int n, int nparams, std::uint64_t seed);
};

// Spectral data of Delta = d d* + d* d, d* = h^{-1} d^dagger h, diagonalized per
// degree through the Cholesky factor of h.
struct Hodge {
  Mat h, hinv, d, dstar, lap;
  Eigen::VectorXd evals;  // eigenvalues of Delta, eigenvectors of pure degree
  Eigen::VectorXi evec_degree;
  Mat V, Vinv;            // Delta = V diag(evals) Vinv

  Mat apply(const std::function<cplx(double)>& f) const;
  Mat heat(double t) const;
  // (z - Delta)^{-N}; ConditioningError when z is within 1e-8 of the spectrum.
  Mat resolvent_power(cplx z, int N) const;
  Mat kernel_projection() const;
  double kernel_threshold() const;
  std::vector<double> degree_spectrum(int q) const;
};

Hodge hodge(const GradedComplex& c, const Mat& h);
Mat heat_operator(const GradedComplex& c, const Mat& h, double t);
Mat resolvent_power(const GradedComplex& c, const Mat& h, cplx z, int N);
// Per-degree blocks of a block-diagonal operator.
Mat degree_block(const GradedComplex& c, const Mat& op, int q);
Eigen::VectorXcd grading_diagonal(const GradedComplex& c, const std::function<double(int)>& w);

struct IndexReport {
  int index = 0;               // tr (-1)^Q Pi_ker
  int rank_nullity_index = 0;  // sum (-1)^q dim H^q from ranks of d
  std::vector<double> supertraces;
  double max_deviation = 0.0;
  bool constant = false;
};
IndexReport index_mckean_singer(const GradedComplex& c, const Mat& h, const std::vector<double>& t_grid);

// Operator-valued forms evaluated on coordinate directions.
cplx omega_I(const GradedComplex& c, const Mat& h);
cplx omega_T(const GradedComplex& c, const MetricFamily& f, const Params& u, int dir);
cplx omega_eta(const HermitianFamily& f, const Params& u, int dir);
// Two-form on a product family; b1 lives on the first factor's parameters, b2 on the second's.
cplx omega_tilde_MT(const GradedComplex& c, const MetricFamily& f, const Params& u, int x, int y, cplx z, int N = 2);

// A k-form given by its values on coordinate directions.
struct FormFn {
  int degree = 1;
  std::function<cplx(const Params&, const std::vector<int>&)> eval;
  Params lower, upper;
};
FormFn as_form(const GradedComplex& c, const MetricFamily& f);                  // omega_T
FormFn as_form(const HermitianFamily& f);                                       // omega_eta
FormFn as_mt_form(const GradedComplex& c, const MetricFamily& f, cplx z, int N = 2);
FormFn as_index_form(const GradedComplex& c, const MetricFamily& f);             // omega_I

// Central-difference d omega on coordinate directions dirs (degree + 1 of them).
cplx numerical_exterior_derivative(const FormFn& form, const Params& u, const std::vector<int>& dirs, double step);

struct DerivativeEstimate {
  cplx value{};                  // at the base step
  std::array<cplx, 3> at_steps;  // 4 step, 2 step, step
  double order = 0.0;            // log2 of successive difference ratio
};
DerivativeEstimate exterior_derivative_with_order(const FormFn& form, const Params& u, const std::vector<int>& dirs,
                                                  double step = 1e-4);

// log T = -(1/2) sum_q (-1)^q q log det' Delta_q.
double log_torsion(const GradedComplex& c, const Mat& h);
// -(1/2) Tr (-1)^Q b (I - Pi_ker): the finite-dimensional t^0 coefficient, with
// the normalization fixed by the 1 x 1 example.
double torsion_variation_trace(const GradedComplex& c, const MetricFamily& f, const Params& u);

struct VariationPoint {
  double u = 0.0, finite_difference = 0.0, trace_formula = 0.0, discrepancy = 0.0;
};
struct VariationReport {
  std::vector<VariationPoint> points;
  double max_discrepancy = 0.0;
  bool acyclic = false;
};
VariationReport torsion_variation_check(const GradedComplex& c, const MetricFamily& f, const std::vector<double>& grid,
                                        double step = 1e-4);

// |b - b*| over all directions at u.
double b_symmetry_defect(const MetricFamily& f, const Params& u);
// |(d* (u + s) - d* (u - s)) / 2s - [d*, b]| in direction dir.
double dstar_variation_defect(const GradedComplex& c, const MetricFamily& f, const Params& u, int dir, double step);
// Along h_t = t^Q h0: max(|t b - Q|, |Delta(t) - t Delta(1)|).
double scaling_curve_defect(const GradedComplex& c, const Mat& h0, double t);

// Contour quadrature of e^{-z} (z - Delta)^{-N} on a circle enclosing the spectrum,
// normalized to reproduce e^{-Delta}: (-1)^{N-1} (N-1)! / (2 pi i) times the integral.
Mat contour_heat(const Hodge& hd, int N, int nodes = 256);

struct MTPullbackReport {
  cplx resolvent_form{};   // t1 t2 omega~_MT(d/dt1, d/dt2) at z
  cplx resolvent_trace{};  // Tr (-1)^Q (Q1 - n1/2)(Q2 - n2/2) (z - Delta)^{-N}
  cplx contour_form{};     // normalized contour integral of t1 t2 omega~_MT
  cplx heat_full{};        // Tr (-1)^Q (Q1 - n1/2)(Q2 - n2/2) e^{-Delta(t1, t2)}
  cplx heat_q1q2{};        // Tr (-1)^Q Q1 Q2 e^{-Delta(t1, t2)}
  double resolvent_defect = 0.0, contour_defect = 0.0, cross_term_defect = 0.0;
};
// Scaling surface h = t1^{Q1 - n1/2} t2^{Q2 - n2/2} (h1 (x) h2).
MTPullbackReport mt_pullback_check(const GradedComplex& c1, const Mat& h1, const GradedComplex& c2, const Mat& h2,
                                   double t1, double t2, cplx z, int N = 2, int nodes = 256);

// Matrix-valued k-form on R^p: components on increasing index tuples.
struct MatrixForm {
  int degree = 0;
  std::map<std::vector<int>, Mat> comps;

  static MatrixForm random(int degree, int nparams, int n, std::uint64_t seed);
  MatrixForm wedge(const MatrixForm& other) const;
  MatrixForm adjoint(const Mat& h) const;  // componentwise h^{-1} A^dagger h
  std::map<std::vector<int>, cplx> trace() const;
};

struct AdjointReport {
  double trace_swap = 0.0;       // Tr k l - (-1)^{kl} Tr l k
  double trace_conjugate = 0.0;  // Tr k - conj Tr k*
  double product_adjoint = 0.0;  // (k l)* - (-1)^{kl} l* k*
  double symmetric_real = 0.0;   // Im Tr b for the symmetric one-form b
  double reversal = 0.0;         // (k1 k2 k3)* - eps_3 k3* k2* k1*
  int eps3 = 0;
  bool ok = false;
};
AdjointReport adjoint_trace_identities_check(std::uint64_t seed, int n = 4, int nparams = 3);

}  // namespace torsionkit
