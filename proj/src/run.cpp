#include "torsionkit/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "torsionkit/matrix_model.hpp"
#include "torsionkit/mellin.hpp"

namespace torsionkit {

namespace {

// Typed field access that reports the JSON path on failure.
struct Node {
  const json& j;
  std::string path;

  bool has(const std::string& key) const { return j.is_object() && j.contains(key); }
  Node at(const std::string& key) const {
    if (!has(key)) throw ParseError("missing field " + path + "/" + key);
    return {j.at(key), path + "/" + key};
  }
  Node at(std::size_t i) const { return {j.at(i), path + "/" + std::to_string(i)}; }
  double num() const {
    if (!j.is_number()) throw ParseError("expected a number at " + path);
    return j.get<double>();
  }
  int integer() const {
    if (!j.is_number_integer()) throw ParseError("expected an integer at " + path);
    return j.get<int>();
  }
  std::string str() const {
    if (!j.is_string()) throw ParseError("expected a string at " + path);
    return j.get<std::string>();
  }
  std::size_t size() const {
    if (!j.is_array()) throw ParseError("expected an array at " + path);
    return j.size();
  }
  std::vector<double> nums() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).num());
    return out;
  }
  std::vector<int> ints() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).integer());
    return out;
  }
  double num_or(const std::string& key, double fallback) const { return has(key) ? at(key).num() : fallback; }
  int int_or(const std::string& key, int fallback) const { return has(key) ? at(key).integer() : fallback; }
  std::string str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).str() : fallback;
  }
  void require_object() const {
    if (!j.is_object()) throw ParseError("expected an object at " + path);
  }
};

const std::set<std::string> kTasks{"zeta", "det", "torsion", "eta", "multitorsion", "verify", "trace"};
const std::set<std::string> kCommonKeys{"schema_version", "task", "tolerance", "t_grid", "t2_grid", "u_grid",
                                        "output", "seed", "threads"};

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

DegreeWeight parse_weight(const std::string& name, const std::string& path) {
  if (name == "unit") return unit_weight();
  if (name == "euler") return euler_weight();
  if (name == "torsion") return torsion_weight();
  if (name == "degree") return degree_weight();
  throw ParseError("unknown weight '" + name + "' at " + path);
}

Spectrum parse_spectrum(const Node& n) {
  n.require_object();
  const std::string kind = n.str_or("kind", "circle");
  if (kind == "circle") return Spectrum::circle(n.at("radius").num(), n.at("alpha").num());
  if (kind == "torus") return Spectrum::torus(n.at("radius").num(), n.at("alpha").num(), n.num_or("beta", 0.0));
  if (kind == "finite") {
    std::vector<Eigenvalue> entries;
    const Node ev = n.at("eigenvalues");
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const Node e = ev.at(i);
      if (e.j.is_array())
        entries.push_back({e.at(0).num(), static_cast<long>(e.at(1).integer())});
      else
        entries.push_back({e.num(), 1});
    }
    return Spectrum::finite(std::move(entries), n.int_or("kernel", 0));
  }
  throw ParseError("unknown spectrum kind '" + kind + "' at " + n.path);
}

Factor parse_factor_node(const Node& n) {
  n.require_object();
  const std::string kind = n.str_or("kind", "circle");
  Factor f;
  if (kind == "circle")
    f = Factor::circle(n.at("radius").num(), n.at("alpha").num());
  else if (kind == "torus")
    f = Factor::torus(n.at("radius").num(), n.at("alpha").num(), n.num_or("beta", 0.0));
  else
    throw ParseError("unknown factor kind '" + kind + "' at " + n.path);
  f.validate();
  return f;
}

FactorAction parse_action_node(const Node& n) {
  n.require_object();
  if (n.has("rot")) return FactorAction::rotation(n.at("rot").num(), n.num_or("lift_phase", 0.0));
  if (n.has("refl")) return FactorAction::reflection(n.at("refl").num(), n.int_or("phase", 1));
  if (n.has("translate")) {
    const Node t = n.at("translate");
    if (t.size() != 2) throw ParseError("translate needs two angles at " + t.path);
    return FactorAction::translation(t.at(0).num(), t.at(1).num());
  }
  if (n.j.empty()) return FactorAction::identity();
  throw ParseError("unknown action at " + n.path + " (expected rot, refl or translate)");
}

QuotientGeometry parse_geometry_node(const Node& n) {
  n.require_object();
  const Node factors = n.at("factors");
  if (factors.size() != 2) throw ParseError("geometry needs exactly two factors at " + factors.path);
  QuotientGeometry g = QuotientGeometry::product(parse_factor_node(factors.at(0)), parse_factor_node(factors.at(1)));
  if (n.has("group")) {
    g.group.clear();
    const Node group = n.at("group");
    for (std::size_t i = 0; i < group.size(); ++i) {
      const Node e = group.at(i);
      e.require_object();
      GroupElement el;
      el.label = e.str_or("label", "g" + std::to_string(i));
      el.f1 = e.has("f1") ? parse_action_node(e.at("f1")) : FactorAction::identity();
      el.f2 = e.has("f2") ? parse_action_node(e.at("f2")) : FactorAction::identity();
      g.group.push_back(el);
    }
  }
  return g;
}

std::vector<cplx> parse_points(const Node& n) {
  std::vector<cplx> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const Node p = n.at(i);
    if (p.j.is_array()) {
      if (p.size() != 2) throw ParseError("complex number needs [re, im] at " + p.path);
      out.emplace_back(p.at(0).num(), p.at(1).num());
    } else {
      out.emplace_back(p.num(), 0.0);
    }
  }
  return out;
}

struct Builder {
  ResultManifest& m;
  void value(const std::string& name, double v, double err) { m.values.push_back({name, v, err}); }
  void check(const std::string& name, bool ok, const std::string& detail) { m.checks.push_back({name, ok, detail}); }
  void expect(const Node& body, const std::string& name, double v, double tol) {
    if (!body.has("expected")) return;
    const double e = body.at("expected").num();
    check("expected", std::abs(v - e) <= tol, name + " - expected = " + fmt(v - e) + " (tol " + fmt(tol) + ")");
  }
};

void task_zeta(const RunConfig& c, const Node& body, Builder& b) {
  const HeatTraceModel model = trace_model(parse_spectrum(body.at("spectrum")));
  const ZetaResult z = continue_zeta(model, c.tolerance);
  b.value("zeta_0", z.value_at_0.real(), 0.0);
  b.value("dzeta_0", z.derivative_at_0.real(), z.error_bound);
  const cplx expected0 = model.expansion.effective_coefficient(0.0);
  b.check("zeta0_identity", z.value_at_0 == expected0, "zeta(0) equals a_0 minus the kernel trace");
  if (body.has("s")) {
    Table t{"zeta", {"s_re", "s_im", "re", "im", "error"}, {}};
    for (cplx s : parse_points(body.at("s"))) {
      const auto v = zeta_value(model, s, c.tolerance);
      t.rows.push_back({s.real(), s.imag(), v.value.real(), v.value.imag(), v.error});
    }
    b.m.tables.push_back(std::move(t));
  }
  b.expect(body, "dzeta_0", z.derivative_at_0.real(), c.tolerance);
}

void task_det(const RunConfig& c, const Node& body, Builder& b) {
  const LogDetResult r = log_det(parse_spectrum(body.at("spectrum")), c.tolerance);
  b.value("log_det", r.value, r.error);
  b.value("zeta_0", r.zeta_at_0.real(), 0.0);
  b.expect(body, "log_det", r.value, c.tolerance);
}

void task_torsion(const RunConfig& c, const Node& body, Builder& b) {
  const Factor f = parse_factor_node(body.at("factor"));
  const TorsionResult r = log_torsion(f.spectrum(), c.tolerance);
  b.value("log_torsion", r.value, r.error);
  b.value("log_torsion_via_determinants", r.via_determinants, r.error);
  b.check("routes_agree", r.routes_agree, "zeta derivative vs determinant sum");
  b.expect(body, "log_torsion", r.value, c.tolerance);
  if (body.has("radii")) {
    Table t{"torsion_radii", {"radius", "log_torsion", "error"}, {}};
    double lo = r.value, hi = r.value;
    for (double radius : body.at("radii").nums()) {
      Factor g = f;
      g.radius = radius;
      g.validate();
      const TorsionResult s = log_torsion(g.spectrum(), c.tolerance);
      t.rows.push_back({radius, s.value, s.error});
      lo = std::min(lo, s.value);
      hi = std::max(hi, s.value);
    }
    b.m.tables.push_back(std::move(t));
    b.check("metric_independence", hi - lo <= c.tolerance, "spread over radii " + fmt(hi - lo));
  }
}

void task_eta(const RunConfig& c, const Node& body, Builder& b) {
  const Node d = body.at("dirac");
  const auto r = eta_invariant(GradedSpectrum::dirac_circle(d.num_or("radius", 1.0), d.at("a").num()), c.tolerance);
  b.value("eta", r.value, r.error);
  b.expect(body, "eta", r.value, c.tolerance);
}

void task_multitorsion(const RunConfig& c, const Node& body, Builder& b) {
  QuotientGeometry g = parse_geometry_node(body.at("geometry"));
  require_valid_geometry(g);
  const std::string p = body.str_or("path", "both");
  MultiPath path = MultiPath::Both;
  if (p == "generic")
    path = MultiPath::Generic;
  else if (p == "separable")
    path = MultiPath::Separable;
  else if (p != "both")
    throw ParseError("path must be generic, separable or both at " + body.path + "/path");
  const MultiTorsionResult r = quotient_multi_torsion(g, c.tolerance, path);
  b.value("multi_torsion", r.value, r.error);
  if (r.generic) b.value("multi_torsion_generic", *r.generic, r.error);
  if (r.separable) b.value("multi_torsion_separable", *r.separable, r.error);
  b.value("imaginary_part", r.imaginary_part, r.error);
  b.check("paths_agree", r.paths_agree, "generic vs product path");
  b.expect(body, "multi_torsion", r.value, body.num_or("expected_tol", 10.0 * c.tolerance));
  if (body.has("radii")) {
    Table t{"multitorsion_radii", {"radius1", "multi_torsion", "error"}, {}};
    double lo = r.value, hi = r.value;
    for (double radius : body.at("radii").nums()) {
      g.factor1.radius = radius;
      require_valid_geometry(g);
      const MultiTorsionResult s = quotient_multi_torsion(g, c.tolerance, path);
      t.rows.push_back({radius, s.value, s.error});
      lo = std::min(lo, s.value);
      hi = std::max(hi, s.value);
    }
    b.m.tables.push_back(std::move(t));
    const double spread_tol = body.num_or("spread_tol", 30.0 * c.tolerance);
    b.check("metric_independence", hi - lo <= spread_tol, "spread over radii " + fmt(hi - lo));
  }
}

// Matrix-model suites ----------------------------------------------------------

const std::vector<cplx> kDefaultZ{{-1.0, 0.0}, {-1.0, 2.0}, {0.0, 5.0}};

void suite_closedness(const RunConfig& c, const Node& body, Builder& b) {
  const double step = body.num_or("step", 1e-4), bound = body.num_or("closed_tol", 1e-6);
  const double min_order = body.num_or("min_order", 1.9);
  const int N = body.int_or("N", 2);
  const std::vector<cplx> zs = body.has("z") ? parse_points(body.at("z")) : kDefaultZ;
  const std::uint64_t s = c.seed;
  auto report = [&](const std::string& name, const DerivativeEstimate& e) {
    const double mag = std::abs(e.value);
    b.value(name, mag, std::abs(e.at_steps[1] - e.at_steps[2]));
    b.value(name + "_order", e.order, 0.0);
    b.check(name, mag <= bound && e.order >= min_order, "|d omega| " + fmt(mag) + ", order " + fmt(e.order));
  };
  const GradedComplex cx = GradedComplex::random_acyclic({2, 3, 1}, s);
  const MetricFamily fx = MetricFamily::random(cx, 2, s + 1);
  report("d_omega_T", exterior_derivative_with_order(as_form(cx, fx), {0.13, -0.21}, {0, 1}, step));
  const HermitianFamily hf = HermitianFamily::random(4, 2, s + 2);
  report("d_omega_eta", exterior_derivative_with_order(as_form(hf), {0.1, 0.2}, {0, 1}, step));
  const GradedComplex c1 = GradedComplex::random_acyclic({1, 2, 1}, s + 3);
  const GradedComplex c2 = GradedComplex::random_acyclic({2, 2}, s + 4);
  const GradedComplex cp = GradedComplex::tensor(c1, c2);
  const MetricFamily fp = MetricFamily::product(MetricFamily::random(c1, 2, s + 5), MetricFamily::random(c2, 1, s + 6));
  for (std::size_t i = 0; i < zs.size(); ++i)
    report("d_omega_MT_z" + std::to_string(i),
           exterior_derivative_with_order(as_mt_form(cp, fp, zs[i], N), {0.1, -0.15, 0.2}, {0, 1, 2}, step));
}

void suite_index(const RunConfig& c, const Node& body, Builder& b) {
  const std::vector<int> dims = body.has("dims") ? body.at("dims").ints() : std::vector<int>{3, 4, 2};
  const std::vector<int> ranks = body.has("ranks") ? body.at("ranks").ints() : std::vector<int>{2, 1};
  const GradedComplex cx = GradedComplex::random(dims, ranks, c.seed);
  const MetricFamily f = MetricFamily::random(cx, 2, c.seed + 1);
  const std::vector<double> ts = c.t_grid.empty() ? std::vector<double>{0.01, 0.1, 1.0, 10.0} : c.t_grid;
  const std::vector<double> us = c.u_grid.empty() ? std::vector<double>{-0.5, 0.0, 0.5} : c.u_grid;
  Table t{"supertraces", {"u", "t", "supertrace"}, {}};
  double worst = 0.0;
  bool kernels_match = true;
  int index = 0;
  for (std::size_t k = 0; k < us.size(); ++k) {
    const IndexReport r = index_mckean_singer(cx, f.h({us[k], -0.5 * us[k]}), ts);
    if (k == 0) index = r.index;
    kernels_match = kernels_match && r.index == index && r.rank_nullity_index == index;
    worst = std::max(worst, r.max_deviation);
    for (std::size_t i = 0; i < ts.size(); ++i) t.rows.push_back({us[k], ts[i], r.supertraces[i]});
  }
  b.m.tables.push_back(std::move(t));
  b.value("index", index, 0.0);
  b.value("supertrace_max_deviation", worst, 0.0);
  b.check("mckean_singer_constant", worst <= body.num_or("index_tol", 1e-10), "max deviation " + fmt(worst));
  b.check("index_matches_kernel", kernels_match, "kernel index equals the rank-nullity index");
}

void suite_variation(const RunConfig& c, const Node& body, Builder& b) {
  const double bound = body.num_or("variation_tol", 1e-6), step = body.num_or("step", 1e-4);
  const std::vector<double> us = c.u_grid.empty() ? std::vector<double>{-0.5, 0.0, 0.5} : c.u_grid;
  const std::vector<std::vector<int>> shapes{{2, 3, 1}, {1, 2, 2, 1}, {3, 4, 1}};
  Table t{"variation", {"family", "u", "finite_difference", "trace_formula"}, {}};
  auto record = [&](const std::string& name, int id, const VariationReport& r) {
    for (const auto& p : r.points) t.rows.push_back({double(id), p.u, p.finite_difference, p.trace_formula});
    b.value(name + "_discrepancy", r.max_discrepancy, 0.0);
    b.check(name, r.max_discrepancy <= bound && r.acyclic, "max discrepancy " + fmt(r.max_discrepancy));
  };
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const GradedComplex cx = GradedComplex::random_acyclic(shapes[i], c.seed + 10 * i);
    record("variation_family" + std::to_string(i), static_cast<int>(i),
           torsion_variation_check(cx, MetricFamily::random(cx, 1, c.seed + 10 * i + 1), us, step));
  }
  const GradedComplex cx = GradedComplex::random_acyclic({2, 3, 1}, c.seed);
  const Mat h0 = MetricFamily::random(cx, 1, c.seed + 2).h({0.0});
  record("variation_global_scaling", 3,
         torsion_variation_check(cx, MetricFamily::exponential(h0, std::vector<double>(cx.size(), 1.0)), us, step));
  Mat one = Mat::Ones(1, 1);
  const GradedComplex line = GradedComplex::from_blocks({one});
  record("variation_one_by_one", 4,
         torsion_variation_check(line, MetricFamily::exponential(Mat::Identity(2, 2), {0.0, 1.0}), us, step));
  b.m.tables.push_back(std::move(t));
}

void suite_adjoint(const RunConfig& c, const Node&, Builder& b) {
  const AdjointReport r = adjoint_trace_identities_check(c.seed);
  const double tol = 1e-10;
  b.check("trace_swap", r.trace_swap <= tol, fmt(r.trace_swap));
  b.check("trace_conjugate", r.trace_conjugate <= tol, fmt(r.trace_conjugate));
  b.check("product_adjoint", r.product_adjoint <= tol, fmt(r.product_adjoint));
  b.check("symmetric_trace_real", r.symmetric_real <= tol, fmt(r.symmetric_real));
  b.check("reversal", r.reversal <= tol && r.eps3 == -1, fmt(r.reversal));
}

void suite_pullback(const RunConfig& c, const Node& body, Builder& b) {
  const int N = body.int_or("N", 2);
  const std::vector<cplx> zs = body.has("z") ? parse_points(body.at("z")) : kDefaultZ;
  const GradedComplex c1 = GradedComplex::random_acyclic({1, 2, 1}, c.seed);
  const GradedComplex c2 = GradedComplex::random_acyclic({2, 2}, c.seed + 1);
  const Mat h1 = MetricFamily::random(c1, 1, c.seed + 2).h({0.0});
  const Mat h2 = MetricFamily::random(c2, 1, c.seed + 3).h({0.0});
  const double t1 = body.num_or("t1", 0.7), t2 = body.num_or("t2", 1.3), tol = body.num_or("pullback_tol", 1e-10);
  double res = 0.0, con = 0.0, cross = 0.0;
  for (cplx z : zs) {
    const MTPullbackReport r = mt_pullback_check(c1, h1, c2, h2, t1, t2, z, N);
    res = std::max(res, r.resolvent_defect);
    con = std::max(con, r.contour_defect);
    cross = std::max(cross, r.cross_term_defect);
    b.value("heat_full", r.heat_full.real(), r.contour_defect);
  }
  b.check("resolvent_pullback", res <= tol, fmt(res));
  b.check("contour_heat", con <= tol, fmt(con));
  b.check("cross_terms_vanish", cross <= tol, fmt(cross));
}

void suite_crossterm(const RunConfig& c, const Node& body, Builder& b) {
  const QuotientGeometry g = parse_geometry_node(body.at("geometry"));
  const ValidationReport v = validate_geometry(g);
  for (const auto& item : v.checks) b.check("geometry_" + item.name, item.passed, item.detail);
  if (!v.ok()) return;
  const CrossTermReport r = cross_term_check(g, c.tolerance);
  b.value("cross_one", r.one, r.error);
  b.value("cross_q1", r.q1, r.error);
  b.value("cross_q2", r.q2, r.error);
  b.check("cross_terms_vanish", r.vanish, "lower-order weights contribute " + fmt(std::max({std::abs(r.one),
                                                                                              std::abs(r.q1),
                                                                                              std::abs(r.q2)})));
}

void task_verify(const RunConfig& c, const Node& body, Builder& b) {
  const std::string suite = body.at("suite").str();
  if (suite == "closedness" || suite == "all") suite_closedness(c, body, b);
  if (suite == "index" || suite == "all") suite_index(c, body, b);
  if (suite == "variation" || suite == "all") suite_variation(c, body, b);
  if (suite == "adjoint" || suite == "all") suite_adjoint(c, body, b);
  if (suite == "pullback" || suite == "all") suite_pullback(c, body, b);
  if (suite == "crossterm") suite_crossterm(c, body, b);
  if (b.m.checks.empty() && b.m.values.empty())
    throw ParseError("unknown suite '" + suite + "' at " + body.path + "/suite");
}

void task_trace(const RunConfig& c, const Node& body, Builder& b) {
  if (c.t_grid.empty()) throw ValidationError("trace task needs a nonempty t_grid");
  Table t{"trace", {"t", "re", "im", "error"}, {}};
  if (body.has("geometry")) {
    const QuotientGeometry g = parse_geometry_node(body.at("geometry"));
    require_valid_geometry(g);
    const DegreeWeight w1 = parse_weight(body.str_or("weight1", "unit"), body.path + "/weight1");
    const DegreeWeight w2 = parse_weight(body.str_or("weight2", "unit"), body.path + "/weight2");
    const std::vector<double>& t2 = c.t2_grid.empty() ? c.t_grid : c.t2_grid;
    t = {"trace", {"t1", "t2", "re", "im", "error"}, {}};
    for (double a : c.t_grid)
      for (double bb : t2) {
        const auto v = quotient_trace(g, w1, w2, a, bb, c.tolerance);
        t.rows.push_back({a, bb, v.value.real(), v.value.imag(), v.error});
      }
    b.m.tables.push_back(std::move(t));
    return;
  }
  std::vector<std::pair<double, double>> samples;
  auto add = [&](double time, const Estimate<cplx>& v) {
    t.rows.push_back({time, v.value.real(), v.value.imag(), v.error});
    samples.emplace_back(time, v.value.real());
  };
  if (body.has("factor")) {
    const Factor f = parse_factor_node(body.at("factor"));
    const DegreeWeight w = parse_weight(body.str_or("weight", "torsion"), body.path + "/weight");
    for (double time : c.t_grid) add(time, eval_weighted_trace(f.spectrum(), w, time, c.tolerance));
  } else {
    const Spectrum s = parse_spectrum(body.at("spectrum"));
    for (double time : c.t_grid) add(time, eval_trace(s, time, c.tolerance));
  }
  b.m.tables.push_back(std::move(t));
  if (body.has("fit")) {
    const FitResult fit = fit_expansion(samples, body.at("fit").at("powers").nums());
    Table ft{"fit", {"power", "coefficient"}, {}};
    for (const auto& term : fit.expansion.terms) {
      ft.rows.push_back({term.power, term.coeff.real()});
      b.value("fit_a[" + fmt17(term.power) + "]", term.coeff.real(), fit.residual_rms);
    }
    b.value("fit_residual_rms", fit.residual_rms, 0.0);
    b.value("fit_residual_max", fit.residual_max, 0.0);
    b.m.tables.push_back(std::move(ft));
    b.m.diagnostic = true;
  }
}

}  // namespace

Factor parse_factor(const json& j) { return parse_factor_node({j, ""}); }
FactorAction parse_action(const json& j) { return parse_action_node({j, ""}); }
QuotientGeometry parse_geometry(const json& j) { return parse_geometry_node({j, ""}); }

RunConfig RunConfig::parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("invalid JSON at " + location(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  const Node root{doc, ""};
  root.require_object();
  RunConfig c;
  c.schema_version = root.int_or("schema_version", kSchemaVersion);
  if (c.schema_version != kSchemaVersion)
    throw ParseError("unsupported schema_version " + std::to_string(c.schema_version) + " at /schema_version");
  c.task = root.at("task").str();
  if (!kTasks.count(c.task)) throw ParseError("unknown task '" + c.task + "' at /task");
  c.tolerance = root.num_or("tolerance", c.tolerance);
  if (root.has("t_grid")) c.t_grid = root.at("t_grid").nums();
  if (root.has("t2_grid")) c.t2_grid = root.at("t2_grid").nums();
  if (root.has("u_grid")) c.u_grid = root.at("u_grid").nums();
  if (root.has("output")) {
    const Node out = root.at("output");
    out.require_object();
    c.out_dir = out.str_or("dir", c.out_dir);
    c.format = out.str_or("format", c.format);
  }
  if (root.has("seed")) {
    const Node s = root.at("seed");
    if (!s.j.is_number_unsigned()) throw ParseError("expected a nonnegative integer at /seed");
    c.seed = s.j.get<std::uint64_t>();
  }
  c.threads = root.int_or("threads", c.threads);
  c.body = json::object();
  for (const auto& [key, value] : doc.items())
    if (!kCommonKeys.count(key)) c.body[key] = value;
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::validate() const {
  if (!(tolerance >= 1e-14 && tolerance <= 1e-2)) throw ValidationError("tolerance must lie in [1e-14, 1e-2]");
  auto grid = [](const std::vector<double>& g, const std::string& name, bool positive) {
    for (double v : g)
      if (!std::isfinite(v) || (positive && !(v > 0))) throw ValidationError(name + " entries must be finite" +
                                                                           (positive ? " and positive" : ""));
    if (!std::is_sorted(g.begin(), g.end())) throw ValidationError(name + " must be sorted");
  };
  grid(t_grid, "t_grid", true);
  grid(t2_grid, "t2_grid", true);
  grid(u_grid, "u_grid", false);
  if (format != "json" && format != "csv" && format != "both") throw ValidationError("format must be json, csv or both");
  if (threads < 1) throw ValidationError("threads must be at least 1");
}

json RunConfig::to_json() const {
  json j = body;
  j["schema_version"] = schema_version;
  j["task"] = task;
  j["tolerance"] = tolerance;
  if (!t_grid.empty()) j["t_grid"] = t_grid;
  if (!t2_grid.empty()) j["t2_grid"] = t2_grid;
  if (!u_grid.empty()) j["u_grid"] = u_grid;
  j["seed"] = seed;
  j["threads"] = threads;
  j["output"] = {{"dir", out_dir}, {"format", format}};
  return j;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt17(row[i]);
    out += "\n";
  }
  return out;
}

bool ResultManifest::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const ReportedValue* ResultManifest::find(const std::string& name) const {
  for (const auto& v : values)
    if (v.name == name) return &v;
  return nullptr;
}

json ResultManifest::to_json() const {
  json j;
  j["version"] = version;
  j["config_hash"] = config_hash;
  j["wall_time"] = wall_time;
  j["diagnostic"] = diagnostic;
  j["config"] = config;
  j["values"] = json::array();
  for (const auto& v : values) j["values"].push_back({{"name", v.name}, {"value", v.value}, {"error", v.error}});
  j["checks"] = json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["tables"] = json::array();
  for (const auto& t : tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  j["all_passed"] = all_passed();
  return j;
}

ResultManifest ResultManifest::from_json(const json& j) {
  ResultManifest m;
  m.version = j.at("version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.wall_time = j.at("wall_time").get<double>();
  m.diagnostic = j.at("diagnostic").get<bool>();
  m.config = j.at("config");
  for (const auto& v : j.at("values"))
    m.values.push_back({v.at("name").get<std::string>(), v.at("value").get<double>(), v.at("error").get<double>()});
  for (const auto& c : j.at("checks"))
    m.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
  for (const auto& t : j.at("tables"))
    m.tables.push_back({t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(),
                        t.at("rows").get<std::vector<std::vector<double>>>()});
  return m;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResultManifest execute(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultManifest m;
  m.config = config.to_json();
  // Output location does not affect results.
  json hashed = m.config;
  hashed.erase("output");
  m.config_hash = config_hash(hashed);
  Builder b{m};
  const Node body{config.body, ""};
  if (config.task == "zeta") task_zeta(config, body, b);
  if (config.task == "det") task_det(config, body, b);
  if (config.task == "torsion") task_torsion(config, body, b);
  if (config.task == "eta") task_eta(config, body, b);
  if (config.task == "multitorsion") task_multitorsion(config, body, b);
  if (config.task == "verify") task_verify(config, body, b);
  if (config.task == "trace") task_trace(config, body, b);
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

namespace {

std::string write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << content;
  return p.string();
}

}  // namespace

RunOutcome run_config(RunConfig config) {
  RunOutcome out;
  try {
    out.manifest = execute(config);
  } catch (const ParseError& e) {
    out.exit_code = static_cast<int>(ExitCode::Parse);
    out.message = std::string("parse error: ") + e.what();
    return out;
  } catch (const json::exception& e) {
    out.exit_code = static_cast<int>(ExitCode::Parse);
    out.message = std::string("parse error: ") + e.what();
    return out;
  } catch (const ValidationError& e) {
    out.exit_code = static_cast<int>(ExitCode::Validation);
    out.message = std::string("validation error: ") + e.what();
    return out;
  } catch (const DomainError& e) {
    out.exit_code = static_cast<int>(ExitCode::Validation);
    out.message = std::string("validation error: ") + e.what();
    return out;
  } catch (const CapabilityError& e) {
    out.exit_code = static_cast<int>(ExitCode::Validation);
    out.message = std::string("validation error: ") + e.what();
    return out;
  } catch (const AccuracyError& e) {
    out.exit_code = static_cast<int>(ExitCode::Accuracy);
    out.message = std::string("accuracy error: ") + e.what();
    return out;
  } catch (const ConditioningError& e) {
    out.exit_code = static_cast<int>(ExitCode::Accuracy);
    out.message = std::string("accuracy error: ") + e.what();
    return out;
  }
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    out.exit_code = static_cast<int>(ExitCode::Validation);
    out.message = "validation error: cannot create output directory " + config.out_dir;
    return out;
  }
  if (config.format != "csv") out.written.push_back(write_file(dir / "manifest.json", out.manifest.to_json().dump(2)));
  if (config.format != "json") {
    std::string csv = "name,value,error\n";
    for (const auto& v : out.manifest.values) csv += v.name + "," + fmt17(v.value) + "," + fmt17(v.error) + "\n";
    out.written.push_back(write_file(dir / "values.csv", csv));
    for (const auto& t : out.manifest.tables) out.written.push_back(write_file(dir / (t.name + ".csv"), t.to_csv()));
  }
  out.exit_code = static_cast<int>(out.manifest.all_passed() ? ExitCode::Ok : ExitCode::CheckFailed);
  std::string failed;
  for (const auto& c : out.manifest.checks)
    if (!c.passed) failed += " " + c.name;
  out.message = failed.empty() ? "ok" : "failed checks:" + failed;
  return out;
}

RunOutcome run(const std::string& config_path, const json& overrides) {
  RunConfig config;
  try {
    config = RunConfig::load(config_path);
    if (overrides.contains("tolerance")) config.tolerance = overrides["tolerance"].get<double>();
    if (overrides.contains("out_dir")) config.out_dir = overrides["out_dir"].get<std::string>();
    if (overrides.contains("format")) config.format = overrides["format"].get<std::string>();
    if (overrides.contains("seed")) config.seed = overrides["seed"].get<std::uint64_t>();
    if (overrides.contains("threads")) config.threads = overrides["threads"].get<int>();
  } catch (const ParseError& e) {
    RunOutcome out;
    out.exit_code = static_cast<int>(ExitCode::Parse);
    out.message = std::string("parse error: ") + e.what();
    return out;
  }
  return run_config(std::move(config));
}

FitResult fit_expansion(const std::vector<std::pair<double, double>>& samples, const std::vector<double>& powers) {
  if (powers.empty()) throw DomainError("fit_expansion: no candidate powers");
  if (samples.size() < 2 * powers.size()) throw DomainError("fit_expansion: need at least two samples per power");
  double tmin = samples.front().first, tmax = tmin;
  for (const auto& [t, v] : samples) {
    if (!(t > 0) || !std::isfinite(v)) throw DomainError("fit_expansion: samples need t > 0 and finite values");
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  if (tmax < 100.0 * tmin) throw DomainError("fit_expansion: t range must span two decades");
  const int n = static_cast<int>(samples.size()), k = static_cast<int>(powers.size());
  Eigen::MatrixXd A(n, k);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = samples[i].second;
    for (int j = 0; j < k; ++j) A(i, j) = std::pow(samples[i].first, powers[j]);
  }
  const Eigen::VectorXd scale = A.colwise().norm().transpose();
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  FitResult r;
  r.condition = sv(0) / sv(k - 1);
  if (!(r.condition < 1e12)) throw ConditioningError("fit_expansion: design matrix condition " + fmt(r.condition));
  const Eigen::VectorXd coef = scale.cwiseInverse().asDiagonal() * svd.solve(y);
  const Eigen::VectorXd res = A * coef - y;
  r.residual_rms = n > k ? std::sqrt(res.squaredNorm() / (n - k)) : 0.0;
  r.residual_max = res.cwiseAbs().maxCoeff();
  for (int j = 0; j < k; ++j) r.expansion.add(powers[j], coef(j));
  return r;
}

}  // namespace torsionkit
