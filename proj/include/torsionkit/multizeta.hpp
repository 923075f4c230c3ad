#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "torsionkit/mellin.hpp"

namespace torsionkit {

// t1^p C_p(t2) summand of the small-t1 expansion (or t2^q C_q(t1) for the
// other variable). The coefficient function's own expansion supplies the
// double coefficients a_{p,q}; below t = 1 its remainder is the boundary
// function b_p, above t = 1 the model itself is the decaying function c_p.
struct CoefficientFunction {
  double power = 0.0;
  HeatTraceModel model;
};

struct SeparableTerm {
  std::string label;
  cplx weight{1.0};
  HeatTraceModel f1, f2;
};

// Two-variable heat trace h(t1, t2) with the data of the four asymptotic regimes.
struct MultiAdmissibleData {
  std::function<cplx(double, double)> evaluator;
  std::vector<CoefficientFunction> t1_terms;  // h ~ sum_p t1^p C1_p(t2), t1 -> 0
  std::vector<CoefficientFunction> t2_terms;  // h ~ sum_q t2^q C2_q(t1), t2 -> 0
  // Optional cancellation-free remainders; by default obtained by subtraction.
  std::function<cplx(double, double)> r_remainder;   // both variables small
  std::function<cplx(double, double)> s1_remainder;  // t1 small, t2 >= 1
  std::function<cplx(double, double)> s2_remainder;  // t1 >= 1, t2 small
  double decay_constant = 0.0;  // |h|, |s1|, |s2| <= C exp(-eps1 t1 - eps2 t2) in their regions
  double eps1 = 0.0, eps2 = 0.0;
  double cutoff1 = 0.0, cutoff2 = 0.0;  // t below which remainders are negligible (0: derive)
  std::optional<std::vector<SeparableTerm>> separable_form;
  bool identically_zero = false;

  cplx a(double p, double q) const;
  cplx operator()(double t1, double t2) const { return evaluator(t1, t2); }
  cplx r(double t1, double t2) const;
  cplx s1(double t1, double t2) const;
  cplx s2(double t1, double t2) const;
  void validate() const;
};

MultiAdmissibleData separable_data(std::vector<SeparableTerm> terms);

struct MultiZetaResult {
  cplx value_at_origin{};
  cplx ds1_at_origin{};
  cplx ds2_at_origin{};
  cplx mixed_at_origin{};
  double error_bound = 0.0;  // bound on the mixed partial
};

// Generic continuation through the four-quadrant split.
MultiZetaResult continue_multizeta(const MultiAdmissibleData& h, double tol);
// Product fast path sum_gamma w zeta_1 zeta_2 for separable inputs.
MultiZetaResult continue_multizeta_separable(const std::vector<SeparableTerm>& terms, double tol);

enum class MultiPath { Generic, Separable, Both };

struct MultiTorsionResult {
  double value = 0.0;  // (1/4) mixed partial, from the generic path unless only the fast path ran
  double error = 0.0;
  std::optional<double> generic;
  std::optional<double> separable;
  double imaginary_part = 0.0;
  bool paths_agree = true;
};

MultiTorsionResult multi_torsion(const MultiAdmissibleData& h, double tol, MultiPath path = MultiPath::Both);

}  // namespace torsionkit
