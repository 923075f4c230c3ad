#include "doctest.h"
#include "oracles.hpp"
#include "torsionkit/mellin.hpp"

using namespace torsionkit;

TEST_CASE("exponential trace has zeta identically one") {
  const HeatTraceModel h = HeatTraceModel::exponential(1.0, 8);
  const ZetaResult z = continue_zeta(h, 1e-10);
  CHECK(std::abs(z.value_at_0 - 1.0) < 1e-14);
  CHECK(std::abs(z.derivative_at_0) < 1e-9);
  for (cplx s : {cplx(0.7, 0.0), cplx(-0.3, 1.0), cplx(2.5, -0.5)})
    CHECK(std::abs(zeta_value(h, s, 1e-10).value - 1.0) < 1e-8);
  const ZetaResult z2 = continue_zeta(HeatTraceModel::exponential(2.0, 8), 1e-10);
  CHECK(std::abs(z2.derivative_at_0.real() + std::log(2.0)) < 1e-9);
}

TEST_CASE("circle determinants against the Lerch formula") {
  for (double a : {0.1, 0.25, 0.5, 0.7}) {
    const LogDetResult r = log_det(Spectrum::circle(1.0, a), 1e-10);
    CHECK(std::abs(r.value - oracle::circle_log_det(a)) < 1e-9);
  }
  CHECK(std::abs(log_det(Spectrum::circle(1.0, 0.25), 1e-10).value - std::log(2.0)) < 1e-9);
  CHECK(std::abs(log_det(Spectrum::circle(1.0, 0.5), 1e-10).value - std::log(4.0)) < 1e-9);
  CHECK(std::abs(log_det(Spectrum::finite({{1.0, 2}}), 1e-10).value) < 1e-10);
  CHECK(std::abs(log_det(Spectrum::finite({{2.0, 1}, {3.0, 2}}), 1e-10).value - std::log(18.0)) < 1e-10);
}

TEST_CASE("zeta at zero vanishes for the odd-dimensional acyclic circle") {
  const ZetaResult z = continue_zeta(trace_model(Spectrum::circle(1.0, 0.5)), 1e-10);
  CHECK(std::abs(z.value_at_0) < 1e-15);
  const ZetaResult k = continue_zeta(trace_model(Spectrum::circle(1.0, 0.0)), 1e-10);
  CHECK(std::abs(k.value_at_0 + 1.0) < 1e-15);
}

TEST_CASE("torsion of the circle complex") {
  for (double r : {0.7, 1.0, 1.3}) {
    const TorsionResult t = log_torsion(GradedSpectrum::circle_complex(r, 0.5), 1e-10);
    CHECK(std::abs(t.value - std::log(2.0)) < 1e-9);
    CHECK(t.routes_agree);
  }
  for (double a : {1.0 / 6.0, 0.3, 0.8})
    CHECK(std::abs(log_torsion(GradedSpectrum::circle_complex(1.0, a), 1e-10).value - oracle::circle_log_torsion(a)) <
          1e-9);
}

TEST_CASE("eta invariant of the shifted Dirac operator") {
  for (double a : {0.25, 0.5, 0.9, 0.13}) {
    const auto e = eta_invariant(GradedSpectrum::dirac_circle(1.0, a), 1e-10);
    CHECK(std::abs(e.value - oracle::dirac_eta(a)) < 1e-9);
  }
  GradedSpectrum unsigned_spec;
  unsigned_spec.per_degree = {Spectrum::finite({{1.0, 1}})};
  CHECK_THROWS(eta_invariant(unsigned_spec, 1e-8));
}

TEST_CASE("eta variation coefficient") {
  const cplx c = variation_coefficient(trace_model(Spectrum::circle(1.0, 0.3)), -0.5);
  CHECK(std::abs(c - std::sqrt(oracle::pi)) < 1e-14);
  CHECK(std::abs(std::abs(eta_variation_rate(c)) - 2.0) < 1e-14);
  const HeatTraceModel tv = trace_model(GradedSpectrum::circle_complex(1.0, 0.5), torsion_weight());
  CHECK(std::abs(variation_coefficient(tv, 0.0)) < 1e-15);
  CHECK(variation_coefficient(tv, 3.0) == cplx(0.0));
}

TEST_CASE("Mellin transform and residues") {
  const HeatTraceModel h = trace_model(Spectrum::circle(1.0, 0.25));
  // I(s) = Gamma(s) zeta(s); its residue at s = 1/2 is a_{-1/2} = sqrt(pi).
  CHECK(std::abs(contour_residue(h, -0.5, 0.2, 1e-10) - std::sqrt(oracle::pi)) < 1e-7);
  const ZetaResult z = continue_zeta(h, 1e-10);
  CHECK(std::abs(contour_residue(h, 0.0, 0.2, 1e-10) - z.value_at_0) < 1e-7);
  // Direct Dirichlet series for Re s > 1/2.
  const double s = 1.5;
  double ref = 0.0;
  for (int k = -200000; k <= 200000; ++k) ref += std::pow((k + 0.25) * (k + 0.25), -s);
  CHECK(std::abs(zeta_value(h, s, 1e-11).value.real() - ref) < 1e-8);
}

TEST_CASE("cutoffs and domain errors") {
  CHECK(decay_cutoff(1.0, 1.0, 0.0, 1e-10) > 20.0);
  CHECK_THROWS_AS(continue_zeta(trace_model(Spectrum::circle(1.0, 0.5)), -1.0), DomainError);
}

TEST_CASE("zeta away from zero with a kernel") {
  // Sum over k != 0 of k^{-2s}; zeta(1) = pi^2 / 3.
  const HeatTraceModel h = trace_model(Spectrum::circle(1.0, 0.0));
  CHECK(std::abs(zeta_value(h, 1.0, 1e-11).value.real() - oracle::pi * oracle::pi / 3.0) < 1e-9);
  CHECK(std::abs(contour_residue(h, 0.0, 0.25, 1e-10) + 1.0) < 1e-8);
}
