#pragma once

#include <map>
#include <string>
#include <vector>

#include "torsionkit/multizeta.hpp"

namespace torsionkit {

// Flat factor: a circle of radius r with a line bundle of holonomy exp(2 pi i alpha),
// or a square flat 2-torus with holonomies (alpha, beta).
struct Factor {
  enum class Kind { Circle, Torus };
  Kind kind = Kind::Circle;
  double radius = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  static Factor circle(double radius, double alpha);
  static Factor torus(double radius, double alpha, double beta);

  int dimension() const { return kind == Kind::Circle ? 1 : 2; }
  bool acyclic() const;
  GradedSpectrum spectrum() const;
  void validate() const;
};

// Isometry of a factor with a chosen lift to the bundle.
//  Rotation(phi, psi):  mode k -> exp(i (k phi + psi)) mode k.
//  Reflection(theta0, eps): theta -> 2 theta0 - theta; mode k -> eps exp(2 i (k + alpha) theta0)
//    mode (-k - 2 alpha), with an extra -1 on 1-forms.
//  Translation(phi, psi) on the torus: mode (k, l) -> exp(i (k phi + l psi)) mode (k, l).
struct FactorAction {
  enum class Kind { Rotation, Reflection, Translation };
  Kind kind = Kind::Rotation;
  double angle = 0.0;       // rotation angle, reflection axis, or first translation angle
  double angle2 = 0.0;      // second translation angle
  double lift_phase = 0.0;  // rotation only
  int phase = 1;            // reflection lift sign at the axis

  static FactorAction identity() { return {}; }
  static FactorAction rotation(double phi, double psi = 0.0);
  static FactorAction reflection(double theta0, int eps = 1);
  static FactorAction translation(double phi, double psi);

  // Whether the underlying isometry has a fixed point (identity: every point).
  bool has_fixed_points() const;
  bool trivial_on_space() const;
};

struct GroupElement {
  std::string label;
  FactorAction f1, f2;
};

struct QuotientGeometry {
  Factor factor1, factor2;
  std::vector<GroupElement> group;  // config order; must contain the identity

  static QuotientGeometry product(Factor f1, Factor f2);
};

struct CheckItem {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckItem> checks;
  std::vector<std::vector<int>> cayley;  // cayley[g][h] = index of g*h, -1 if absent
  int identity_index = -1;

  bool ok() const;
  bool passed(const std::string& name) const;
  std::string summary() const;
};

ValidationReport validate_geometry(const QuotientGeometry& geom);
// Throws ValidationError carrying the report summary unless every check passes.
void require_valid_geometry(const QuotientGeometry& geom);

// Multiplication operator sigma(theta) = sum_n c_n exp(i n theta) on a circle
// factor; an empty map is sigma = 1.
using Multiplier = std::map<int, cplx>;

// Tr' sum_q w(q) sigma gamma^* exp(-t Delta_q) in the explicit eigenbasis.
Estimate<cplx> factor_twisted_trace(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                                    double t, double tol, const Multiplier& sigma = {});
// The same trace as a model with its exact finite expansion.
HeatTraceModel twisted_trace_model(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                                   const Multiplier& sigma = {});
// t^0 coefficient of a reflection-twisted trace from the fixed-point formula
// sum_x sigma(x) eps_x tr(dphi^* on forms) / |det(1 - dphi)|, before the Tr' shift.
cplx fixed_point_coefficient(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                             const Multiplier& sigma = {});

// Bidegree weight (-1)^{q1 + q2} w1(q1) w2(q2) on the quotient: one separable
// term (1/|Gamma|) h1_gamma(t1) h2_gamma(t2) per group element.
MultiAdmissibleData quotient_weighted_trace(const QuotientGeometry& geom, const DegreeWeight& w1,
                                            const DegreeWeight& w2);
// Direct evaluation of the same trace.
Estimate<cplx> quotient_trace(const QuotientGeometry& geom, const DegreeWeight& w1, const DegreeWeight& w2,
                              double t1, double t2, double tol);

DegreeWeight degree_weight();  // w(q) = q

struct CrossTermReport {
  double one = 0.0, q1 = 0.0, q2 = 0.0;  // (1/4) mixed partials for Tr (-1)^Q {1, Q1, Q2} e^{-Delta}
  double error = 0.0;
  bool vanish = false;
};
// Checks that the lower-order terms of (Q1 - n1/2)(Q2 - n2/2) contribute nothing.
CrossTermReport cross_term_check(const QuotientGeometry& geom, double tol);

MultiTorsionResult quotient_multi_torsion(const QuotientGeometry& geom, double tol,
                                          MultiPath path = MultiPath::Both);

}  // namespace torsionkit
