#include "doctest.h"
#include "oracles.hpp"
#include "torsionkit/geometry.hpp"
#include "torsionkit/multizeta.hpp"

using namespace torsionkit;

namespace {
SeparableTerm term(HeatTraceModel a, HeatTraceModel b, cplx w = 1.0) { return {"t", w, std::move(a), std::move(b)}; }
}  // namespace

TEST_CASE("product of exponentials") {
  const auto terms = std::vector<SeparableTerm>{term(HeatTraceModel::exponential(1.0, 8), HeatTraceModel::exponential(1.0, 8))};
  const MultiZetaResult z = continue_multizeta(separable_data(terms), 1e-8);
  CHECK(std::abs(z.value_at_origin - 1.0) < 1e-10);
  CHECK(std::abs(z.ds1_at_origin) < 1e-7);
  CHECK(std::abs(z.ds2_at_origin) < 1e-7);
  CHECK(std::abs(z.mixed_at_origin) < 1e-6);
}

TEST_CASE("second factor e^{-2t}") {
  const auto terms = std::vector<SeparableTerm>{term(HeatTraceModel::exponential(1.0, 8), HeatTraceModel::exponential(2.0, 8))};
  const MultiZetaResult z = continue_multizeta(separable_data(terms), 1e-8);
  CHECK(std::abs(z.value_at_origin - 1.0) < 1e-10);
  CHECK(std::abs(z.ds2_at_origin.real() + std::log(2.0)) < 1e-7);
  CHECK(std::abs(z.ds1_at_origin) < 1e-7);
  CHECK(std::abs(z.mixed_at_origin) < 1e-6);
}

TEST_CASE("two-circle torsion kernel") {
  const auto w = torsion_weight();
  const HeatTraceModel c = trace_model(GradedSpectrum::circle_complex(1.0, 0.5), w);
  const auto terms = std::vector<SeparableTerm>{term(c, c)};
  const double l2 = std::log(2.0);
  const MultiZetaResult fast = continue_multizeta_separable(terms, 1e-9);
  CHECK(std::abs(fast.mixed_at_origin.real() - 4.0 * l2 * l2) < 1e-7);
  const MultiZetaResult gen = continue_multizeta(separable_data(terms), 1e-7);
  CHECK(std::abs(gen.mixed_at_origin - fast.mixed_at_origin) < 2e-6);
  const MultiTorsionResult mt = multi_torsion(separable_data(terms), 1e-7);
  CHECK(std::abs(mt.value - l2 * l2) < 1e-6);
  CHECK(mt.paths_agree);
}

TEST_CASE("validation of inconsistent data") {
  MultiAdmissibleData d = separable_data({term(HeatTraceModel::exponential(1.0, 4), HeatTraceModel::exponential(1.0, 4))});
  d.t1_terms[0].model.expansion.terms[0].coeff += 1.0;
  CHECK_THROWS(d.validate());
}

TEST_CASE("mixed bookkeeping on a weighted sum") {
  const HeatTraceModel a = trace_model(Spectrum::circle(1.0, 0.25));
  const HeatTraceModel b = trace_model(GradedSpectrum::circle_complex(0.8, 1.0 / 3.0), torsion_weight());
  const auto terms = std::vector<SeparableTerm>{term(a, b, 0.5), term(HeatTraceModel::exponential(1.5, 8), a, -0.25)};
  const MultiZetaResult fast = continue_multizeta_separable(terms, 1e-9);
  const MultiZetaResult gen = continue_multizeta(separable_data(terms), 1e-7);
  CHECK(std::abs(gen.value_at_origin - fast.value_at_origin) < 1e-8);
  CHECK(std::abs(gen.ds1_at_origin - fast.ds1_at_origin) < 1e-6);
  CHECK(std::abs(gen.ds2_at_origin - fast.ds2_at_origin) < 1e-6);
  CHECK(std::abs(gen.mixed_at_origin - fast.mixed_at_origin) < 2e-6);
}
