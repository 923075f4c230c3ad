// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "torsionkit/geometry.hpp"
#include "torsionkit/matrix_model.hpp"
#include "torsionkit/mellin.hpp"
#include "torsionkit/multizeta.hpp"

using namespace torsionkit;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

QuotientGeometry klein(double r1) {
  QuotientGeometry g = QuotientGeometry::product(Factor::circle(r1, 0.5), Factor::circle(1.0, 0.5));
  g.group.push_back({"g", FactorAction::rotation(oracle::pi), FactorAction::reflection(0.0, 1)});
  return g;
}

// Regression constant from the first verified run; equals (log 2)^2 / 2.
constexpr double kKleinMT = 0.2402265069591007;

Outcome determinant_oracle() {
  double worst = 0.0;
  for (double a : {0.1, 0.25, 0.5, 0.7}) {
    const LogDetResult r = log_det(Spectrum::circle(1.0, a), 1e-10);
    worst = std::max(worst, std::abs(r.value - oracle::circle_log_det(a)));
  }
  return {worst < 1e-8, fmt("max |log det - Lerch oracle| = %.2e", worst)};
}

Outcome torsion_values() {
  double worst = 0.0, lo = 1e300, hi = -1e300;
  for (double r : {0.7, 1.0, 1.3}) {
    const double v = log_torsion(GradedSpectrum::circle_complex(r, 0.5), 1e-10).value;
    worst = std::max(worst, std::abs(v - std::log(2.0)));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double sixth = std::abs(log_torsion(GradedSpectrum::circle_complex(1.0, 1.0 / 6.0), 1e-10).value);
  return {worst < 1e-8 && hi - lo < 1e-8 && sixth < 1e-8,
          fmt("|log T - log 2| <= %.2e", worst) + fmt(", spread %.2e", hi - lo) + fmt(", |log T(1/6)| = %.2e", sixth)};
}

Outcome eta_checks() {
  double worst = 0.0;
  for (double a : {0.25, 0.5, 0.9})
    worst = std::max(worst, std::abs(eta_invariant(GradedSpectrum::dirac_circle(1.0, a), 1e-10).value - oracle::dirac_eta(a)));
  // B + u on the crossing-free interval around a = 0.3.
  const double a = 0.3, h = 1e-4;
  const double fd = (eta_invariant(GradedSpectrum::dirac_circle(1.0, a + h), 1e-11).value -
                     eta_invariant(GradedSpectrum::dirac_circle(1.0, a - h), 1e-11).value) /
                    (2.0 * h);
  const double rate = eta_variation_rate(variation_coefficient(trace_model(Spectrum::circle(1.0, a)), -0.5));
  const double gap = std::abs(std::abs(fd) - std::abs(rate));
  return {worst < 1e-8 && gap < 1e-4 && std::abs(std::abs(rate) - 2.0) < 1e-4,
          fmt("max |eta - (1 - 2a)| = %.2e", worst) + fmt(", d eta/du: fd %.6f", fd) + fmt(", formula %.6f", rate)};
}

Outcome zeta_identity() {
  std::vector<HeatTraceModel> models{
      trace_model(Spectrum::circle(1.0, 0.25)),
      trace_model(Spectrum::circle(0.8, 0.0)),
      trace_model(Spectrum::torus(1.0, 0.0, 0.0)),
      trace_model(Spectrum::torus(1.2, 0.25, 0.5)),
      trace_model(Spectrum::finite({{1.0, 2}, {4.0, 1}}, 3)),
      trace_model(GradedSpectrum::circle_complex(1.0, 0.5), torsion_weight()),
      trace_model(GradedSpectrum::torus_complex(1.0, 0.0, 0.0), euler_weight()),
      HeatTraceModel::exponential(1.0, 8),
  };
  bool exact = true;
  double worst = 0.0;
  const double tol = 1e-8;
  for (const auto& m : models) {
    const ZetaResult z = continue_zeta(m, tol);
    exact = exact && z.value_at_0 == m.expansion.coefficient(0.0) - m.expansion.kernel_trace;
    worst = std::max(worst, std::abs(contour_residue(m, 0.0, 0.25, tol) - z.value_at_0));
  }
  return {exact && worst < tol, std::string(exact ? "exact on all models" : "identity broken") +
                                    fmt(", quadrature route deviation %.2e", worst)};
}

Outcome multizeta_oracle() {
  const auto w = torsion_weight();
  std::vector<std::vector<SeparableTerm>> inputs{
      {{"exp", 1.0, HeatTraceModel::exponential(1.0, 8), HeatTraceModel::exponential(1.0, 8)}},
      {{"exp2", 1.0, HeatTraceModel::exponential(1.0, 8), HeatTraceModel::exponential(2.0, 8)}},
      {{"circles", 1.0, trace_model(GradedSpectrum::circle_complex(1.0, 0.5), w),
        trace_model(GradedSpectrum::circle_complex(1.0, 0.5), w)}},
      {{"mixed", 0.5, trace_model(Spectrum::circle(1.0, 0.25)), trace_model(GradedSpectrum::circle_complex(0.8, 1.0 / 3.0), w)},
       {"mixed2", -0.25, HeatTraceModel::exponential(1.5, 8), trace_model(Spectrum::circle(1.3, 0.5))}},
      *quotient_weighted_trace(klein(1.0), degree_weight(), degree_weight()).separable_form,
  };
  double worst = 0.0;
  for (const auto& terms : inputs) {
    const MultiZetaResult g = continue_multizeta(separable_data(terms), 1e-7);
    const MultiZetaResult f = continue_multizeta_separable(terms, 1e-9);
    worst = std::max({worst, std::abs(g.mixed_at_origin - f.mixed_at_origin), std::abs(g.ds1_at_origin - f.ds1_at_origin),
                      std::abs(g.ds2_at_origin - f.ds2_at_origin), std::abs(g.value_at_origin - f.value_at_origin)});
  }
  return {worst < 2e-6, fmt("max generic vs product deviation %.2e over 5 inputs", worst)};
}

Outcome product_formula() {
  const double l2 = std::log(2.0);
  const double a = quotient_multi_torsion(QuotientGeometry::product(Factor::circle(1, 0.5), Factor::circle(1, 0.5)), 1e-7).value;
  const double b =
      quotient_multi_torsion(QuotientGeometry::product(Factor::circle(1, 1.0 / 6.0), Factor::circle(1, 0.5)), 1e-7).value;
  return {std::abs(a - l2 * l2) < 1e-6 && std::abs(b) < 1e-6,
          fmt("MT(1/2, 1/2) - (log 2)^2 = %.2e", a - l2 * l2) + fmt(", MT(1/6, 1/2) = %.2e", b)};
}

Outcome klein_independence() {
  double lo = 1e300, hi = -1e300, pin = 0.0;
  for (double r : {0.7, 1.0, 1.3}) {
    const double v = quotient_multi_torsion(klein(r), 1e-7).value;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    pin = std::max(pin, std::abs(v - kKleinMT));
  }
  return {hi - lo < 3e-6 && pin < 3e-6, fmt("MT = %.10f", lo) + fmt(", spread %.2e", hi - lo) + fmt(", vs pinned %.2e", pin)};
}

Outcome even_vanishing() {
  const QuotientGeometry g = QuotientGeometry::product(Factor::torus(1.0, 0.5, 0.5), Factor::circle(1.0, 0.5));
  const double mt = quotient_multi_torsion(g, 1e-7).value;
  double worst = 0.0;
  for (double t1 : {0.01, 0.1, 0.5, 2.0, 8.0})
    for (double t2 : {0.01, 0.1, 0.5, 2.0, 8.0})
      worst = std::max(worst, std::abs(quotient_trace(g, unit_weight(), degree_weight(), t1, t2, 1e-12).value));
  return {std::abs(mt) < 1e-5 && worst < 1e-10, fmt("MT = %.2e", mt) + fmt(", max |Tr (-1)^Q Q2 e^{-Delta}| = %.2e", worst)};
}

Outcome closedness() {
  double worst = 0.0, order = 1e300;
  auto take = [&](const DerivativeEstimate& e) {
    worst = std::max(worst, std::abs(e.value));
    order = std::min(order, e.order);
  };
  for (std::uint64_t s : {1u, 2u, 3u}) {
    const HermitianFamily hf = HermitianFamily::random(4, 2, s);
    take(exterior_derivative_with_order(as_form(hf), {0.1, -0.2}, {0, 1}, 1e-4));
    const GradedComplex c = GradedComplex::random_acyclic({2, 3, 1}, s);
    take(exterior_derivative_with_order(as_form(c, MetricFamily::random(c, 2, s + 10)), {0.13, -0.21}, {0, 1}, 1e-4));
    const GradedComplex c1 = GradedComplex::random_acyclic({1, 2, 1}, s + 20);
    const GradedComplex c2 = GradedComplex::random_acyclic({2, 2}, s + 30);
    const GradedComplex cp = GradedComplex::tensor(c1, c2);
    const MetricFamily fp =
        MetricFamily::product(MetricFamily::random(c1, 2, s + 40), MetricFamily::random(c2, 1, s + 50));
    for (cplx z : {cplx(-1, 0), cplx(-1, 2), cplx(0, 5)})
      take(exterior_derivative_with_order(as_mt_form(cp, fp, z, 2), {0.1, -0.15, 0.2}, {0, 1, 2}, 1e-4));
  }
  return {worst <= 1e-6 && order >= 1.9, fmt("max |d omega| = %.2e at step 1e-4", worst) + fmt(", min order %.3f", order)};
}

Outcome mckean_singer() {
  double worst = 0.0;
  bool match = true;
  struct Case {
    std::vector<int> dims, ranks;
  };
  const std::vector<Case> cases{{{3, 4, 2}, {2, 1}}, {{2, 3, 1}, {2, 1}}, {{2, 3, 3, 1}, {1, 2, 1}}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const GradedComplex c = GradedComplex::random(cases[i].dims, cases[i].ranks, 100 + i);
    const MetricFamily f = MetricFamily::random(c, 2, 200 + i);
    int index = 0;
    bool first = true;
    for (double u1 : {-0.6, 0.0, 0.6})
      for (double u2 : {-0.3, 0.4}) {
        const IndexReport r = index_mckean_singer(c, f.h({u1, u2}), {1e-3, 0.01, 0.1, 1.0, 10.0});
        if (first) index = r.index;
        first = false;
        match = match && r.index == index && r.rank_nullity_index == index;
        for (double s : r.supertraces) worst = std::max(worst, std::abs(s - index));
      }
  }
  return {worst <= 1e-10 && match, fmt("max |Str e^{-t Delta(u)} - index| = %.2e", worst)};
}

Outcome variation_formula() {
  double worst = 0.0;
  bool acyclic = true;
  const std::vector<std::vector<int>> shapes{{2, 3, 1}, {1, 2, 2, 1}, {3, 4, 1}};
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const GradedComplex c = GradedComplex::random_acyclic(shapes[i], 300 + i);
    const VariationReport r = torsion_variation_check(c, MetricFamily::random(c, 1, 400 + i), {-0.6, -0.2, 0.2, 0.6}, 1e-4);
    worst = std::max(worst, r.max_discrepancy);
    acyclic = acyclic && r.acyclic;
  }
  return {worst <= 1e-6 && acyclic, fmt("max |fd - trace formula| = %.2e on 3 families", worst)};
}

Outcome fixed_point_asymptotics() {
  // A non-constant multiplier; with sigma = 1 and alpha = 1/2 the twisted trace vanishes identically.
  const Multiplier sigma{{0, 1.0}, {1, 0.5}, {-1, 0.5}, {3, cplx(0, -0.3)}, {-3, cplx(0, 0.3)}};
  const Factor c = Factor::circle(1.0, 0.5);
  const double th = 0.3;
  auto s = [](double x) { return 1.0 + std::cos(x) + 0.6 * std::sin(3 * x); };
  // Fixed points th and th + pi; the second lift carries exp(-2 pi i alpha) = -1.
  const double coeff = 0.5 * (s(th) - s(th + oracle::pi));
  const FactorAction refl = FactorAction::reflection(th, 1);
  std::vector<double> x, y;
  for (int i = 0; i <= 12; ++i) {
    const double t = std::pow(10.0, -4.0 + 3.0 * i / 12.0);
    const auto v = factor_twisted_trace(c, refl, torsion_weight(), t, 1e-14, sigma);
    x.push_back(std::log(t));
    y.push_back(std::log(std::abs(v.value - coeff)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / x.size();
    my += y[i] / y.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  const double lib = std::abs(fixed_point_coefficient(c, refl, torsion_weight(), sigma) - coeff);
  return {slope >= 0.45 && lib < 1e-12, fmt("fitted exponent %.3f", slope) + fmt(", t^0 coefficient %.6f", coeff)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "determinant oracle", 4.0, determinant_oracle},
      {2, "torsion values and metric independence", 1.0, torsion_values},
      {3, "eta invariant and variation", 2.0, eta_checks},
      {4, "zeta(0) structural identity", 10.0, zeta_identity},
      {5, "multi-zeta separable oracle", 10.0, multizeta_oracle},
      {6, "multi-torsion product formula", 10.0, product_formula},
      {7, "multi-torsion metric independence", 30.0, klein_independence},
      {8, "even-factor vanishing", 30.0, even_vanishing},
      {9, "closedness suite", 60.0, closedness},
      {10, "index and McKean-Singer", 5.0, mckean_singer},
      {11, "finite-dimensional variation formula", 10.0, variation_formula},
      {12, "fixed-point asymptotics", 5.0, fixed_point_asymptotics},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = o.passed && secs <= c.budget;
    if (!ok) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2f s, budget %.0f s]\n", ok ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
