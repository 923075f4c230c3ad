#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "torsionkit/matrix_model.hpp"

using namespace torsionkit;

namespace {
Mat scalar(double v) { return Mat::Constant(1, 1, v); }
}  // namespace

TEST_CASE("small complexes") {
  const GradedComplex line = GradedComplex::from_blocks({scalar(1.0)});
  const Hodge hd = hodge(line, Mat::Identity(2, 2));
  CHECK(hd.degree_spectrum(0) == std::vector<double>{1.0});
  CHECK(std::abs(hd.heat(0.7)(0, 0) - std::exp(-0.7)) < 1e-15);
  Mat d(1, 2);
  d << 1.0, 0.0;
  const GradedComplex two = GradedComplex::from_blocks({d});
  const Hodge h2 = hodge(two, Mat::Identity(3, 3));
  CHECK(std::abs(h2.degree_spectrum(0)[0]) < 1e-15);
  CHECK(std::abs(h2.degree_spectrum(0)[1] - 1.0) < 1e-15);
  CHECK(std::abs(h2.degree_spectrum(1)[0] - 1.0) < 1e-15);
  const IndexReport r = index_mckean_singer(two, Mat::Identity(3, 3), {0.01, 1.0, 30.0});
  CHECK(r.index == 1);
  CHECK(r.constant);
  const IndexReport r0 = index_mckean_singer(line, Mat::Identity(2, 2), {0.01, 1.0});
  CHECK(r0.index == 0);
  CHECK(r0.max_deviation < 1e-15);
  CHECK_THROWS_AS(GradedComplex::from_blocks({scalar(1.0), scalar(1.0)}), ValidationError);
}

TEST_CASE("heat operator against scaling and squaring") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradedComplex c = GradedComplex::random({2, 3, 2}, {2, 1}, seed);
    const Mat h = MetricFamily::random(c, 1, seed + 7).h({0.2});
    const Hodge hd = hodge(c, h);
    for (double t : {0.1, 1.0, 3.0}) {
      const Mat ref = Mat(-t * hd.lap).exp();
      CHECK((hd.heat(t) - ref).norm() < 1e-10 * std::max(1.0, ref.norm()));
    }
    const cplx z(-1.0, 2.0);
    const Mat R = (z * Mat::Identity(c.size(), c.size()) - hd.lap).inverse();
    CHECK((hd.resolvent_power(z, 2) - R * R).norm() < 1e-10);
    CHECK((contour_heat(hd, 3) - hd.heat(1.0)).norm() < 1e-10);
  }
}

TEST_CASE("resolvent near the spectrum") {
  const GradedComplex line = GradedComplex::from_blocks({scalar(1.0)});
  const Hodge hd = hodge(line, Mat::Identity(2, 2));
  CHECK_THROWS_AS(hd.resolvent_power(cplx(1.0, 1e-10), 1), ConditioningError);
}

TEST_CASE("random complexes") {
  const GradedComplex c = GradedComplex::random_acyclic({1, 2, 2, 1}, 5);
  CHECK(c.closure_defect() < 1e-14);
  CHECK(index_mckean_singer(c, Mat::Identity(6, 6), {1.0}).rank_nullity_index == 0);
  const GradedComplex n = GradedComplex::random({3, 4, 2}, {2, 1}, 5);
  const IndexReport r = index_mckean_singer(n, MetricFamily::random(n, 1, 2).h({0.1}), {0.01, 0.1, 1.0, 10.0});
  CHECK(r.index == 1);
  CHECK(r.rank_nullity_index == 1);
  CHECK(r.max_deviation < 1e-10);
  CHECK_THROWS_AS(GradedComplex::random_acyclic({2, 2, 1}, 1), ValidationError);
  const GradedComplex t = GradedComplex::tensor(GradedComplex::random_acyclic({1, 1}, 1), n);
  CHECK(t.closure_defect() < 1e-14);
  CHECK(t.is_product());
}

TEST_CASE("metric family derivatives") {
  const GradedComplex c = GradedComplex::random_acyclic({2, 3, 1}, 4);
  const MetricFamily f = MetricFamily::random(c, 2, 9);
  const Params u{0.2, -0.1};
  for (int i = 0; i < 2; ++i) {
    Params up = u, dn = u;
    up[i] += 1e-5;
    dn[i] -= 1e-5;
    CHECK(((f.h(up) - f.h(dn)) / 2e-5 - f.dh(u, i)).norm() < 1e-8);
  }
  CHECK(b_symmetry_defect(f, u) < 1e-12);
  CHECK(dstar_variation_defect(c, f, u, 0, 1e-4) < 1e-6);
  CHECK(scaling_curve_defect(c, f.h(u), 2.5) < 1e-12);
  CHECK_THROWS_AS(f.check_interior({0.99, 0.0}, 0.1), DomainError);
}

TEST_CASE("closedness of the forms") {
  const GradedComplex c = GradedComplex::random_acyclic({2, 3, 1}, 3);
  const MetricFamily f = MetricFamily::random(c, 2, 4);
  const DerivativeEstimate e = exterior_derivative_with_order(as_form(c, f), {0.1, 0.3}, {0, 1});
  CHECK(std::abs(e.value) < 1e-6);
  CHECK(e.order > 1.9);
  const DerivativeEstimate i = exterior_derivative_with_order(as_index_form(c, f), {0.1, 0.3}, {0});
  CHECK(std::abs(i.value) < 1e-9);
  // d of a gradient: omega = d(log det h restricted to degree 0).
  FormFn grad{1,
              [&](const Params& u, const std::vector<int>& dirs) {
                Params up = u, dn = u;
                up[dirs[0]] += 1e-3;
                dn[dirs[0]] -= 1e-3;
                auto g = [&](const Params& v) { return cplx(std::log(f.h(v).determinant().real())); };
                return (g(up) - g(dn)) / 2e-3;
              },
              f.lower, f.upper};
  CHECK(std::abs(numerical_exterior_derivative(grad, {0.1, 0.3}, {0, 1}, 1e-4)) < 1e-6);
  const HermitianFamily hf = HermitianFamily::random(5, 2, 8);
  CHECK(std::abs(exterior_derivative_with_order(as_form(hf), {-0.2, 0.4}, {0, 1}).value) < 1e-6);
}

TEST_CASE("omega tilde MT") {
  const GradedComplex c1 = GradedComplex::random_acyclic({1, 2, 1}, 1), c2 = GradedComplex::random_acyclic({2, 2}, 2);
  const GradedComplex c = GradedComplex::tensor(c1, c2);
  const MetricFamily constant = MetricFamily::product(MetricFamily::constant(Mat::Identity(4, 4), 2),
                                                      MetricFamily::constant(Mat::Identity(4, 4), 1));
  CHECK(std::abs(omega_tilde_MT(c, constant, {0.0, 0.0, 0.0}, 0, 2, cplx(-1.0, 0.0))) == 0.0);
  const MetricFamily f = MetricFamily::product(MetricFamily::random(c1, 2, 3), MetricFamily::random(c2, 1, 4));
  for (cplx z : {cplx(-1, 0), cplx(-1, 2), cplx(0, 5)}) {
    const DerivativeEstimate e = exterior_derivative_with_order(as_mt_form(c, f, z, 3), {0.1, -0.2, 0.3}, {0, 1, 2});
    CHECK(std::abs(e.value) < 1e-6);
    CHECK(e.order > 1.9);
  }
  CHECK_THROWS_AS(omega_tilde_MT(c1, MetricFamily::random(c1, 2, 1), {0.0, 0.0}, 0, 1, cplx(-1, 0)), CapabilityError);
}

TEST_CASE("scaling surface pullback") {
  const GradedComplex c1 = GradedComplex::random_acyclic({1, 2, 1}, 11), c2 = GradedComplex::random_acyclic({2, 3, 1}, 12);
  const Mat h1 = MetricFamily::random(c1, 1, 13).h({0.0}), h2 = MetricFamily::random(c2, 1, 14).h({0.0});
  for (int N : {2, 3}) {
    const MTPullbackReport r = mt_pullback_check(c1, h1, c2, h2, 0.6, 1.7, cplx(-1.0, 2.0), N);
    CHECK(r.resolvent_defect < 1e-10);
    CHECK(r.contour_defect < 1e-10);
    CHECK(r.cross_term_defect < 1e-10);
  }
}

TEST_CASE("torsion variation") {
  const GradedComplex line = GradedComplex::from_blocks({scalar(1.0)});
  const MetricFamily e = MetricFamily::exponential(Mat::Identity(2, 2), {0.0, 1.0});
  for (double u : {-0.4, 0.0, 0.9}) {
    CHECK(std::abs(log_torsion(line, e.h({u})) - u) < 1e-13);
    CHECK(std::abs(torsion_variation_trace(line, e, {u}) - 1.0) < 1e-13);
  }
  const GradedComplex c = GradedComplex::random_acyclic({2, 3, 1}, 21);
  const VariationReport r = torsion_variation_check(c, MetricFamily::random(c, 1, 22), {-0.5, 0.0, 0.5});
  CHECK(r.acyclic);
  CHECK(r.max_discrepancy < 1e-6);
  const VariationReport k = torsion_variation_check(c, MetricFamily::constant(Mat::Identity(6, 6)), {0.0});
  CHECK(std::abs(k.points[0].finite_difference) < 1e-12);
  CHECK(std::abs(k.points[0].trace_formula) < 1e-12);
}

TEST_CASE("adjoint and trace identities") {
  for (std::uint64_t seed : {1u, 2u}) {
    const AdjointReport r = adjoint_trace_identities_check(seed);
    CHECK(r.ok);
    CHECK(r.eps3 == -1);
  }
  const MatrixForm a = MatrixForm::random(1, 2, 3, 5);
  CHECK(a.wedge(a).comps.size() == 1);
  const MatrixForm s = MatrixForm::random(1, 2, 1, 6);
  CHECK(std::abs(s.wedge(s).comps.begin()->second(0, 0)) < 1e-15);
}
