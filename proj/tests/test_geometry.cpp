#include "doctest.h"
#include "oracles.hpp"
#include "torsionkit/geometry.hpp"

using namespace torsionkit;

namespace {
QuotientGeometry klein(double r1) {
  QuotientGeometry g = QuotientGeometry::product(Factor::circle(r1, 0.5), Factor::circle(1.0, 0.5));
  g.group.push_back({"g", FactorAction::rotation(oracle::pi), FactorAction::reflection(0.0, 1)});
  return g;
}
}  // namespace

TEST_CASE("identity-twisted torsion weight equals minus the 1-form trace") {
  const auto v = factor_twisted_trace(Factor::circle(1.0, 0.5), FactorAction::identity(), torsion_weight(), 1.0, 1e-12);
  CHECK(std::abs(v.value.real() + oracle::theta_brute(1.0, 0.5, 1.0)) < 1e-11);
  CHECK(std::abs(v.value.real() + 1.7722706) < 2e-7);
}

TEST_CASE("rotation by pi against the eigensum") {
  const Factor c = Factor::circle(1.0, 0.5);
  const FactorAction rot = FactorAction::rotation(oracle::pi, oracle::pi / 2);
  for (double t : {0.05, 1.0}) {
    std::complex<double> ref = 0.0;
    for (int k = -400; k < 400; ++k) ref += std::polar(std::exp(-t * (k + 0.5) * (k + 0.5)), oracle::pi * (k + 0.5));
    CHECK(std::abs(factor_twisted_trace(c, rot, unit_weight(), t, 1e-12).value - ref) < 1e-11);
    CHECK(std::abs(twisted_trace_model(c, rot, unit_weight())(t) - ref) < 1e-10);
  }
  const HeatTraceModel m = twisted_trace_model(c, rot, unit_weight());
  CHECK(m.expansion.terms.empty());
  CHECK(std::abs(m(1e-3)) < 1e-10);
}

TEST_CASE("reflection t^0 coefficient") {
  const Factor c = Factor::circle(1.0, 0.5);
  for (int eps : {1, -1}) {
    const FactorAction refl = FactorAction::reflection(0.0, eps);
    CHECK(std::abs(fixed_point_coefficient(c, refl, torsion_weight())) < 1e-15);
    const HeatTraceModel m = twisted_trace_model(c, refl, torsion_weight());
    CHECK(std::abs(m(1e-4)) < 1e-8);
  }
  // sigma(theta) = 1 + cos(theta) + 0.6 sin(3 theta); coefficient sum_q q (sigma(x1) + sigma(x2) e^{-2 pi i a}) / 2.
  const Multiplier sigma{{0, 1.0}, {1, 0.5}, {-1, 0.5}, {3, cplx(0, -0.3)}, {-3, cplx(0, 0.3)}};
  const double th = 0.3;
  auto s = [](double x) { return 1.0 + std::cos(x) + 0.6 * std::sin(3 * x); };
  const cplx ref = 0.5 * (s(th) - s(th + oracle::pi));
  const FactorAction refl = FactorAction::reflection(th, 1);
  CHECK(std::abs(fixed_point_coefficient(c, refl, torsion_weight(), sigma) - ref) < 1e-14);
  const HeatTraceModel m = twisted_trace_model(c, refl, torsion_weight(), sigma);
  CHECK(std::abs(m(1e-5) - ref) < 1e-3);
  CHECK(std::abs(factor_twisted_trace(c, refl, torsion_weight(), 0.2, 1e-12, sigma).value - m(0.2)) < 1e-10);
}

TEST_CASE("geometry validation") {
  CHECK(validate_geometry(QuotientGeometry::product(Factor::circle(1, 0.5), Factor::circle(1, 0.5))).ok());
  CHECK(validate_geometry(klein(1.0)).ok());
  QuotientGeometry both = klein(1.0);
  both.group[1].f1 = FactorAction::reflection(0.0, 1);
  const ValidationReport r = validate_geometry(both);
  CHECK_FALSE(r.passed("freeness"));
  QuotientGeometry q = QuotientGeometry::product(Factor::circle(1, 0.5), Factor::circle(1, 0.25));
  q.group.push_back({"g", FactorAction::rotation(oracle::pi), FactorAction::reflection(0.0, 1)});
  CHECK_FALSE(validate_geometry(q).passed("equivariance"));
  CHECK_FALSE(validate_geometry(QuotientGeometry::product(Factor::circle(1, 0.0), Factor::circle(1, 0.5))).passed("acyclicity"));
  QuotientGeometry open = QuotientGeometry::product(Factor::circle(1, 0.5), Factor::circle(1, 0.5));
  open.group.push_back({"g", FactorAction::rotation(oracle::pi / 2), FactorAction::identity()});
  CHECK_FALSE(validate_geometry(open).passed("group"));
  CHECK_THROWS_AS(require_valid_geometry(both), ValidationError);
  CHECK_THROWS_AS(Factor::circle(-1.0, 0.5).validate(), ValidationError);
}

TEST_CASE("quotient traces") {
  const QuotientGeometry triv = QuotientGeometry::product(Factor::circle(1, 0.5), Factor::circle(0.8, 0.25));
  const MultiAdmissibleData d = quotient_weighted_trace(triv, unit_weight(), unit_weight());
  REQUIRE(d.separable_form);
  CHECK(d.separable_form->size() == 1);
  for (double t1 : {0.1, 1.0})
    for (double t2 : {0.3, 2.0}) {
      // (sum (-1)^q1 Tr e^{-t1 Delta_q1}) (sum (-1)^q2 ...) = 0 for each circle.
      CHECK(std::abs(d(t1, t2)) < 1e-12);
      const auto v = quotient_trace(triv, degree_weight(), degree_weight(), t1, t2, 1e-12);
      const double ref = oracle::theta_brute(1.0, 0.5, t1) * oracle::theta_brute(0.8, 0.25, t2);
      CHECK(std::abs(v.value.real() - ref) < 1e-10 * ref);
    }
  const MultiAdmissibleData k = quotient_weighted_trace(klein(1.0), degree_weight(), degree_weight());
  REQUIRE(k.separable_form);
  CHECK(k.separable_form->size() == 2);
  for (double t1 : {2.0, 5.0})
    for (double t2 : {2.0, 5.0}) CHECK(std::abs(k(t1, t2)) <= k.decay_constant * std::exp(-k.eps1 * t1 - k.eps2 * t2));
  const QuotientGeometry tc = QuotientGeometry::product(Factor::torus(1.0, 0.5, 0.5), Factor::circle(1.0, 0.5));
  for (double t1 : {0.05, 0.7, 3.0})
    for (double t2 : {0.05, 0.7, 3.0})
      CHECK(std::abs(quotient_trace(tc, unit_weight(), degree_weight(), t1, t2, 1e-12).value) < 1e-10);
}

TEST_CASE("cross terms and quotient multi-torsion") {
  const CrossTermReport ct = cross_term_check(klein(1.0), 1e-8);
  CHECK(ct.vanish);
  const MultiTorsionResult mt = quotient_multi_torsion(klein(1.0), 1e-7);
  CHECK(mt.paths_agree);
  CHECK(std::abs(mt.value - 0.5 * std::log(2.0) * std::log(2.0)) < 3e-6);
  QuotientGeometry z = QuotientGeometry::product(Factor::circle(1, 1.0 / 6.0), Factor::circle(1, 0.5));
  CHECK(std::abs(quotient_multi_torsion(z, 1e-7).value) < 1e-6);
}
