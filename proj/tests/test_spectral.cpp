#include "doctest.h"
#include "oracles.hpp"
#include "torsionkit/mellin.hpp"
#include "torsionkit/spectral.hpp"

using namespace torsionkit;

TEST_CASE("circle trace at t = 1 matches eigensum and dual form") {
  const auto v = eval_weighted_trace(GradedSpectrum::circle_complex(1.0, 0.5), [](int q) { return q == 0 ? 1.0 : 0.0; },
                                     1.0, 1e-12);
  double dual = 1.0;
  for (int m = 1; m < 20; ++m) dual += 2.0 * std::pow(-1.0, m) * std::exp(-oracle::pi * oracle::pi * m * m);
  dual *= std::sqrt(oracle::pi);
  CHECK(v.value.real() == doctest::Approx(oracle::theta_brute(1.0, 0.5, 1.0)).epsilon(1e-13));
  CHECK(std::abs(v.value.real() - dual) < 1e-12);
  CHECK(std::abs(v.value.real() - 1.7722706) < 2e-7);
}

TEST_CASE("theta agrees with brute force over many scales") {
  for (double r : {0.7, 1.0, 2.5})
    for (double a : {0.0, 0.1, 0.5, 0.93})
      for (double t : {1e-3, 0.05, 1.0, 20.0}) {
        const double ref = oracle::theta_brute(r, a, t, 2000);
        const auto v = theta(r, a, t, 1e-13);
        CHECK(std::abs(v.value - ref) < 1e-12 * std::max(1.0, ref));
        CHECK(std::abs(theta_direct(r, a, t, 1e-13).value - theta_dual(r, a, t, 1e-13).value.real()) <
              1e-11 * std::max(1.0, ref));
      }
}

TEST_CASE("traces decay for large t and exclude the kernel") {
  CHECK(std::abs(eval_trace(Spectrum::circle(1.0, 0.5), 60.0, 1e-12).value) < 1e-6);
  for (double t : {0.5, 5.0, 50.0}) {
    const auto v = eval_trace(Spectrum::circle(1.0, 0.0), t, 1e-12);
    CHECK(std::abs(v.value.real() - (oracle::theta_brute(1.0, 0.0, t) - 1.0)) < 1e-11);
  }
  CHECK(std::abs(eval_trace(Spectrum::circle(1.0, 0.0), 80.0, 1e-12).value) < 1e-30 + 1e-12);
}

TEST_CASE("truncation index") {
  LatticeFamily fam{1.0, {0.5}, 1, 0};
  const int K = truncate_with_tail_bound(fam, 1.0, 1e-12);
  CHECK(K <= 6);
  CHECK(direct_tail_bound(1.0, 0.5, 1.0, K) < 1e-12);
  CHECK(truncate_with_tail_bound(fam, 10.0, 1e-3) < truncate_with_tail_bound(fam, 10.0, 1e-12));
  CHECK(truncate_with_tail_bound(fam, 1e-4, 1e-12) > truncate_with_tail_bound(fam, 1e-2, 1e-12));
}

TEST_CASE("Poisson dual evaluation") {
  CHECK(std::abs(poisson_dual_eval(1.0, 0.5, 1.0, 1e-13).real() - oracle::theta_brute(1.0, 0.5, 1.0)) < 1e-10);
  const double t = 1e-6;
  CHECK(std::abs(poisson_dual_eval(1.0, 0.0, t, 1e-13).real() * std::sqrt(t) - std::sqrt(oracle::pi)) < 1e-9);
  for (double t2 : {0.3, 2.0})
    CHECK(std::abs(poisson_dual_eval(2.0, 0.3, t2, 1e-13) - poisson_dual_eval(1.0, 0.3, t2 / 4.0, 1e-13)) < 1e-12);
}

TEST_CASE("torus trace is a product of circle sums") {
  for (double t : {0.01, 0.4, 3.0}) {
    const auto v = eval_trace(Spectrum::torus(1.3, 0.25, 0.5), t, 1e-13);
    const double ref = oracle::theta_brute(1.3, 0.25, t) * oracle::theta_brute(1.3, 0.5, t);
    CHECK(std::abs(v.value.real() - ref) < 1e-11 * ref);
  }
}

TEST_CASE("finite spectra and weights") {
  const Spectrum s = Spectrum::finite({{1.0, 2}, {3.0, 1}}, 1);
  for (double t : {0.1, 1.0}) CHECK(std::abs(eval_trace(s, t, 1e-14).value.real() - (2 * std::exp(-t) + std::exp(-3 * t))) < 1e-14);
  CHECK(torsion_weight()(3) == -3.0);
  CHECK(euler_weight()(1) == -1.0);
  CHECK(unit_weight()(2) == 1.0);
  CHECK_THROWS_AS(eval_trace(s, -1.0, 1e-10), DomainError);
  CHECK_THROWS_AS(Spectrum::circle(-1.0, 0.5).validate(), std::exception);
}

TEST_CASE("trace models carry expansion and cancellation-free remainder") {
  const HeatTraceModel m = trace_model(Spectrum::circle(1.0, 0.3));
  CHECK(std::abs(m.expansion.coefficient(-0.5) - std::sqrt(oracle::pi)) < 1e-14);
  for (double t : {1e-3, 0.1, 0.9}) {
    CHECK(std::abs(m(t).real() - oracle::theta_brute(1.0, 0.3, t, 3000)) < 1e-11 * std::sqrt(1.0 / t));
    const cplx r = m.eval_remainder(t);
    CHECK(std::abs(r - (m(t) - std::sqrt(oracle::pi / t))) < 1e-10);
  }
  const HeatTraceModel k = trace_model(Spectrum::circle(1.0, 0.0));
  CHECK(std::abs(k.expansion.effective_coefficient(0.0) + 1.0) < 1e-15);
  CHECK(variation_coefficient(m, 0.5) == cplx(0.0));
}

TEST_CASE("bigraded spectra") {
  GradedSpectrum a, b;
  a.per_degree = {Spectrum::finite({{1.0, 1}}), Spectrum::finite({{1.0, 1}})};
  b.per_degree = {Spectrum::finite({{2.0, 1}})};
  const BigradedSpectrum p = BigradedSpectrum::product(a, b);
  const cplx v = p.trace([](int q1, int) { return q1 % 2 ? -1.0 : 1.0; }, 0.5, 0.25);
  CHECK(std::abs(v) < 1e-15);
}
