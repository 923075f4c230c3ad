#include "torsionkit/geometry.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace torsionkit {

namespace {

constexpr double kEval = 1e-17;
constexpr double kAngleTol = 1e-12;

bool is_full_turn(double x) { return std::abs(std::remainder(x, 2.0 * kPi)) < kAngleTol; }

bool reflection_compatible(double alpha) {
  const double m = 2.0 * alpha;
  return std::abs(m - std::round(m)) < 1e-12;
}

int twice_alpha(double alpha) { return static_cast<int>(std::lround(2.0 * alpha)); }

int circle_degree_count(const Factor& f) { return f.kind == Factor::Kind::Circle ? 2 : 3; }

double form_mult(const Factor& f, int q) { return f.kind == Factor::Kind::Torus && q == 1 ? 2.0 : 1.0; }

cplx sum_weight(const Factor& f, const DegreeWeight& w, bool reflected) {
  cplx s = 0.0;
  for (int q = 0; q < circle_degree_count(f); ++q) s += w(q) * form_mult(f, q) * ((reflected && q % 2) ? -1.0 : 1.0);
  return s;
}

cplx multiplier_mean(const Multiplier& sigma) {
  if (sigma.empty()) return 1.0;
  auto it = sigma.find(0);
  return it == sigma.end() ? cplx{} : it->second;
}

cplx multiplier_at(const Multiplier& sigma, double theta) {
  if (sigma.empty()) return 1.0;
  cplx v = 0.0;
  for (const auto& [n, c] : sigma) v += c * std::polar(1.0, n * theta);
  return v;
}

void check_action(const Factor& f, const FactorAction& a) {
  if (f.kind == Factor::Kind::Circle) {
    if (a.kind == FactorAction::Kind::Translation) throw ValidationError("translation acts on torus factors only");
    if (a.kind == FactorAction::Kind::Reflection) {
      if (!reflection_compatible(f.alpha))
        throw ValidationError("reflection is not equivariant: holonomy alpha must be 0 or 1/2");
      if (a.phase != 1 && a.phase != -1) throw ValidationError("reflection phase must be +1 or -1");
    }
  } else {
    if (a.kind == FactorAction::Kind::Reflection) throw ValidationError("torus factors support translations only");
    if (a.kind == FactorAction::Kind::Rotation && !(is_full_turn(a.angle) && a.lift_phase == 0.0))
      throw ValidationError("torus factors support translations only");
  }
}

struct Term {
  double lambda;
  cplx amp;
};

HeatTraceModel exponential_sum_model(const std::vector<Term>& terms, cplx kernel) {
  if (terms.empty()) {
    HeatTraceModel z = HeatTraceModel::zero();
    if (kernel != 0.0) {
      z.expansion.terms.push_back({0.0, kernel});
      z.expansion.kernel_trace = kernel;
    }
    return z;
  }
  HeatTraceModel m;
  m.evaluator = [terms](double t) {
    cplx s = 0.0;
    for (const auto& e : terms) s += e.amp * std::exp(-t * e.lambda);
    return s;
  };
  m.remainder = [terms](double t) {
    cplx s = 0.0;
    for (const auto& e : terms) s += e.amp * std::expm1(-t * e.lambda);
    return s;
  };
  cplx a0 = kernel;
  double eps = std::numeric_limits<double>::infinity();
  for (const auto& e : terms) {
    a0 += e.amp;
    eps = std::min(eps, e.lambda);
  }
  double c = 0.0;
  for (const auto& e : terms) c += std::abs(e.amp) * std::exp(-(e.lambda - eps));
  m.expansion.terms.push_back({0.0, a0});
  m.expansion.kernel_trace = kernel;
  m.expansion.decay_rate = eps;
  m.decay_constant = c;
  m.remainder_order = 1.0;
  return m;
}

// Reflection-twisted mode sum: mode n = 2(k + alpha) contributes
// eps exp(i n theta0) sigma_n exp(-t n^2 / (4 r^2)); n = 0 is a zero mode.
std::vector<Term> reflection_terms(const Factor& f, const FactorAction& a, const DegreeWeight& w,
                                   const Multiplier& sigma, cplx& kernel) {
  const cplx s = sum_weight(f, w, true);
  const int m = twice_alpha(f.alpha);
  Multiplier sig = sigma.empty() ? Multiplier{{0, 1.0}} : sigma;
  std::vector<Term> out;
  kernel = 0.0;
  for (const auto& [n, c] : sig) {
    if ((n - m) % 2 != 0 || c == 0.0) continue;
    const cplx amp = s * double(a.phase) * std::polar(1.0, n * a.angle) * c;
    if (n == 0)
      kernel += amp;
    else
      out.push_back({n * n / (4.0 * f.radius * f.radius), amp});
  }
  return out;
}

HeatTraceModel twisted_lattice_model(double r, std::vector<double> shifts, std::vector<double> angles, cplx coef) {
  bool all_zero_shift = true;
  for (double s : shifts) all_zero_shift = all_zero_shift && s == 0.0;
  const cplx kernel = all_zero_shift ? coef : cplx{};
  const double zero = all_zero_shift ? 1.0 : 0.0;
  auto raw = [=](double t) {
    cplx v = coef;
    for (std::size_t i = 0; i < shifts.size(); ++i) v *= twisted_theta(r, shifts[i], angles[i], t, kEval).value;
    return v;
  };
  HeatTraceModel m;
  m.evaluator = [=](double t) { return raw(t) - kernel; };
  m.remainder = raw;
  if (kernel != 0.0) m.expansion.terms.push_back({0.0, 0.0});
  m.expansion.kernel_trace = kernel;
  LatticeFamily fam{r, shifts, 1, 0};
  const double eps = fam.smallest_nonzero();
  double th = 1.0;
  for (double s : shifts) th *= theta(r, s, 1.0, kEval).value;
  m.expansion.decay_rate = eps;
  m.decay_constant = std::abs(coef) * std::exp(eps) * (th - zero);
  m.remainder_order = 64.0;
  return m;
}

// Monomial operator on a finite window of modes: index -> (target index, phase).
struct ModeMap {
  std::vector<int> target;
  std::vector<cplx> phase;
};

struct Window {
  std::vector<std::array<int, 3>> modes;  // (degree, k, l)
  std::map<std::array<int, 3>, int> index;
};

Window make_window(const Factor& f) {
  Window w;
  const int W = 3;
  if (f.kind == Factor::Kind::Circle) {
    const int m = reflection_compatible(f.alpha) ? twice_alpha(f.alpha) : 0;
    for (int q = 0; q < 2; ++q)
      for (int k = -W; k <= W - m; ++k) w.modes.push_back({q, k, 0});
  } else {
    for (int k = -W; k <= W; ++k)
      for (int l = -W; l <= W; ++l) w.modes.push_back({0, k, l});
  }
  for (std::size_t i = 0; i < w.modes.size(); ++i) w.index[w.modes[i]] = static_cast<int>(i);
  return w;
}

ModeMap mode_map(const Factor& f, const FactorAction& a, const Window& win) {
  ModeMap mm;
  for (const auto& [q, k, l] : win.modes) {
    std::array<int, 3> to{q, k, l};
    cplx ph = 1.0;
    switch (a.kind) {
      case FactorAction::Kind::Rotation:
        ph = std::polar(1.0, k * a.angle + a.lift_phase);
        break;
      case FactorAction::Kind::Translation:
        ph = std::polar(1.0, k * a.angle + l * a.angle2);
        break;
      case FactorAction::Kind::Reflection: {
        const int m = twice_alpha(f.alpha);
        to = {q, -k - m, 0};
        ph = double(a.phase) * std::polar(1.0, (2.0 * k + m) * a.angle) * (q == 1 ? -1.0 : 1.0);
        break;
      }
    }
    auto it = win.index.find(to);
    mm.target.push_back(it == win.index.end() ? -1 : it->second);
    mm.phase.push_back(ph);
  }
  return mm;
}

std::optional<ModeMap> compose(const ModeMap& g, const ModeMap& h) {
  ModeMap out;
  for (std::size_t i = 0; i < h.target.size(); ++i) {
    const int j = h.target[i];
    if (j < 0 || g.target[j] < 0) return std::nullopt;
    out.target.push_back(g.target[j]);
    out.phase.push_back(h.phase[i] * g.phase[j]);
  }
  return out;
}

// Scalar lambda with a = lambda b, if the maps agree up to a scalar.
std::optional<cplx> scalar_ratio(const ModeMap& a, const ModeMap& b) {
  if (a.target != b.target) return std::nullopt;
  const cplx lambda = a.phase[0] / b.phase[0];
  for (std::size_t i = 0; i < a.phase.size(); ++i)
    if (std::abs(a.phase[i] - lambda * b.phase[i]) > 1e-9) return std::nullopt;
  return lambda;
}

struct ElementMap {
  ModeMap m1, m2;
};

bool same_element(const ElementMap& a, const ElementMap& b) {
  auto l1 = scalar_ratio(a.m1, b.m1);
  auto l2 = scalar_ratio(a.m2, b.m2);
  return l1 && l2 && std::abs(*l1 * *l2 - 1.0) < 1e-9;
}

ModeMap identity_map(const Window& w) {
  ModeMap m;
  for (std::size_t i = 0; i < w.modes.size(); ++i) {
    m.target.push_back(static_cast<int>(i));
    m.phase.push_back(1.0);
  }
  return m;
}

}  // namespace

Factor Factor::circle(double radius, double alpha) {
  Factor f;
  f.radius = radius;
  f.alpha = alpha;
  f.validate();
  return f;
}

Factor Factor::torus(double radius, double alpha, double beta) {
  Factor f;
  f.kind = Kind::Torus;
  f.radius = radius;
  f.alpha = alpha;
  f.beta = beta;
  f.validate();
  return f;
}

bool Factor::acyclic() const { return kind == Kind::Circle ? alpha != 0.0 : (alpha != 0.0 || beta != 0.0); }

GradedSpectrum Factor::spectrum() const {
  validate();
  return kind == Kind::Circle ? GradedSpectrum::circle_complex(radius, alpha)
                              : GradedSpectrum::torus_complex(radius, alpha, beta);
}

void Factor::validate() const {
  if (!(radius > 0) || !std::isfinite(radius)) throw ValidationError("factor radius must be positive and finite");
  auto in_range = [](double a) { return a >= 0.0 && a < 1.0; };
  if (!in_range(alpha) || (kind == Kind::Torus && !in_range(beta)))
    throw ValidationError("factor holonomy must lie in [0, 1)");
}

FactorAction FactorAction::rotation(double phi, double psi) {
  FactorAction a;
  a.angle = phi;
  a.lift_phase = psi;
  return a;
}

FactorAction FactorAction::reflection(double theta0, int eps) {
  FactorAction a;
  a.kind = Kind::Reflection;
  a.angle = theta0;
  a.phase = eps;
  return a;
}

FactorAction FactorAction::translation(double phi, double psi) {
  FactorAction a;
  a.kind = Kind::Translation;
  a.angle = phi;
  a.angle2 = psi;
  return a;
}

bool FactorAction::trivial_on_space() const {
  switch (kind) {
    case Kind::Rotation:
      return is_full_turn(angle);
    case Kind::Translation:
      return is_full_turn(angle) && is_full_turn(angle2);
    case Kind::Reflection:
      return false;
  }
  return false;
}

bool FactorAction::has_fixed_points() const { return kind == Kind::Reflection || trivial_on_space(); }

QuotientGeometry QuotientGeometry::product(Factor f1, Factor f2) {
  QuotientGeometry g;
  g.factor1 = f1;
  g.factor2 = f2;
  g.group.push_back({"id", FactorAction::identity(), FactorAction::identity()});
  return g;
}

bool ValidationReport::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

bool ValidationReport::passed(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c.passed;
  return false;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "pass " : "FAIL ") << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_geometry(const QuotientGeometry& geom) {
  ValidationReport rep;
  auto add = [&](const std::string& name, bool pass, std::string detail = {}) {
    rep.checks.push_back({name, pass, std::move(detail)});
  };

  bool factors_ok = true;
  for (const Factor* f : {&geom.factor1, &geom.factor2}) {
    try {
      f->validate();
    } catch (const std::exception& e) {
      factors_ok = false;
      add("factors", false, e.what());
    }
  }
  if (factors_ok) add("factors", true);

  const bool acyclic = factors_ok && geom.factor1.acyclic() && geom.factor2.acyclic();
  add("acyclicity", acyclic, acyclic ? "" : "every factor needs nontrivial holonomy");

  bool equivariant = factors_ok && !geom.group.empty();
  std::string eq_detail = geom.group.empty() ? "group is empty" : "";
  if (factors_ok)
    for (const auto& g : geom.group) {
      try {
        check_action(geom.factor1, g.f1);
        check_action(geom.factor2, g.f2);
      } catch (const std::exception& e) {
        equivariant = false;
        eq_detail = g.label + ": " + e.what();
        break;
      }
    }
  add("equivariance", equivariant, eq_detail);
  if (!equivariant) {
    add("group", false, "not checked: actions are not equivariant");
    add("freeness", false, "not checked: actions are not equivariant");
    return rep;
  }

  const Window w1 = make_window(geom.factor1), w2 = make_window(geom.factor2);
  std::vector<ElementMap> maps;
  for (const auto& g : geom.group) maps.push_back({mode_map(geom.factor1, g.f1, w1), mode_map(geom.factor2, g.f2, w2)});
  const ElementMap id{identity_map(w1), identity_map(w2)};
  const int n = static_cast<int>(maps.size());

  std::string group_detail;
  for (int i = 0; i < n && group_detail.empty(); ++i)
    for (int j = i + 1; j < n; ++j)
      if (same_element(maps[i], maps[j])) {
        group_detail = "duplicate elements " + geom.group[i].label + ", " + geom.group[j].label;
        break;
      }
  for (int i = 0; i < n; ++i)
    if (same_element(maps[i], id)) rep.identity_index = i;
  if (group_detail.empty() && rep.identity_index < 0) group_detail = "no identity element";
  rep.cayley.assign(n, std::vector<int>(n, -1));
  for (int i = 0; i < n && group_detail.empty(); ++i)
    for (int j = 0; j < n; ++j) {
      auto m1 = compose(maps[i].m1, maps[j].m1);
      auto m2 = compose(maps[i].m2, maps[j].m2);
      if (m1 && m2)
        for (int k = 0; k < n; ++k)
          if (same_element({*m1, *m2}, maps[k])) rep.cayley[i][j] = k;
      if (rep.cayley[i][j] < 0) {
        group_detail = "not closed: " + geom.group[i].label + " * " + geom.group[j].label;
        break;
      }
    }
  for (int i = 0; i < n && group_detail.empty(); ++i) {
    bool has_inverse = false;
    for (int j = 0; j < n; ++j) has_inverse = has_inverse || rep.cayley[i][j] == rep.identity_index;
    if (!has_inverse) group_detail = "no inverse for " + geom.group[i].label;
  }
  for (int i = 0; i < n && group_detail.empty(); ++i)
    for (int j = 0; j < n && group_detail.empty(); ++j)
      for (int k = 0; k < n; ++k)
        if (rep.cayley[rep.cayley[i][j]][k] != rep.cayley[i][rep.cayley[j][k]]) {
          group_detail = "associativity fails";
          break;
        }
  add("group", group_detail.empty(), group_detail);

  std::string free_detail;
  for (int i = 0; i < n; ++i) {
    if (i == rep.identity_index) continue;
    const auto& g = geom.group[i];
    if (g.f1.has_fixed_points() && g.f2.has_fixed_points()) {
      free_detail = g.label + " has fixed points in both factors";
      break;
    }
  }
  add("freeness", free_detail.empty(), free_detail);
  return rep;
}

void require_valid_geometry(const QuotientGeometry& geom) {
  auto rep = validate_geometry(geom);
  if (!rep.ok()) throw ValidationError("invalid geometry:\n" + rep.summary());
}

DegreeWeight degree_weight() {
  return [](int q) { return double(q); };
}

HeatTraceModel twisted_trace_model(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                                   const Multiplier& sigma) {
  factor.validate();
  check_action(factor, action);
  if (factor.kind == Factor::Kind::Torus) {
    if (!sigma.empty()) throw CapabilityError("multipliers are supported on circle factors only");
    const bool translation = action.kind == FactorAction::Kind::Translation;
    const double phi = translation ? action.angle : 0.0, psi = translation ? action.angle2 : 0.0;
    HeatTraceModel base =
        (is_full_turn(phi) && is_full_turn(psi))
            ? trace_model(Spectrum::torus(factor.radius, factor.alpha, factor.beta))
            : twisted_lattice_model(factor.radius, {factor.alpha, factor.beta}, {phi, psi}, 1.0);
    std::vector<std::pair<cplx, HeatTraceModel>> parts;
    for (int q = 0; q < 3; ++q) parts.push_back({weight(q) * form_mult(factor, q), base});
    return HeatTraceModel::combine(parts);
  }
  if (action.kind == FactorAction::Kind::Reflection) {
    cplx kernel;
    auto terms = reflection_terms(factor, action, weight, sigma, kernel);
    return exponential_sum_model(terms, kernel);
  }
  const cplx coef = sum_weight(factor, weight, false) * std::polar(1.0, action.lift_phase) * multiplier_mean(sigma);
  if (coef == 0.0) return HeatTraceModel::zero();
  if (is_full_turn(action.angle))
    return HeatTraceModel::combine({{coef, trace_model(Spectrum::circle(factor.radius, factor.alpha))}});
  return twisted_lattice_model(factor.radius, {factor.alpha}, {action.angle}, coef);
}

Estimate<cplx> factor_twisted_trace(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                                    double t, double tol, const Multiplier& sigma) {
  if (!(t > 0)) throw DomainError("factor_twisted_trace: t must be positive");
  if (!(tol > 0)) throw DomainError("factor_twisted_trace: tolerance must be positive");
  factor.validate();
  check_action(factor, action);
  if (factor.kind == Factor::Kind::Circle && action.kind == FactorAction::Kind::Reflection) {
    cplx kernel;
    cplx s = 0.0;
    for (const auto& e : reflection_terms(factor, action, weight, sigma, kernel)) s += e.amp * std::exp(-t * e.lambda);
    return {s, 0.0};
  }
  // Per-degree eigensums with the mode phases of the action.
  cplx total = 0.0;
  double err = 0.0;
  const int nq = circle_degree_count(factor);
  const double share = tol / (4.0 * nq);
  for (int q = 0; q < nq; ++q) {
    const double wq = weight(q) * form_mult(factor, q);
    if (wq == 0.0) continue;
    cplx tr;
    double e = 0.0;
    if (factor.kind == Factor::Kind::Circle) {
      auto th = twisted_theta(factor.radius, factor.alpha, action.angle, t, share / std::abs(wq));
      const cplx lift = std::polar(1.0, action.lift_phase) * multiplier_mean(sigma);
      tr = lift * (th.value - (factor.alpha == 0.0 ? 1.0 : 0.0));
      e = std::abs(lift) * th.error;
    } else {
      const bool translation = action.kind == FactorAction::Kind::Translation;
      const double phi = translation ? action.angle : 0.0, psi = translation ? action.angle2 : 0.0;
      auto a = twisted_theta(factor.radius, factor.alpha, phi, t, share / (4.0 * std::abs(wq)));
      auto b = twisted_theta(factor.radius, factor.beta, psi, t, share / (4.0 * std::abs(wq) * (1.0 + std::abs(a.value))));
      tr = a.value * b.value - ((factor.alpha == 0.0 && factor.beta == 0.0) ? 1.0 : 0.0);
      e = std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error;
    }
    total += wq * tr;
    err += std::abs(wq) * e;
  }
  return {total, err};
}

cplx fixed_point_coefficient(const Factor& factor, const FactorAction& action, const DegreeWeight& weight,
                             const Multiplier& sigma) {
  factor.validate();
  check_action(factor, action);
  if (action.kind != FactorAction::Kind::Reflection) return 0.0;
  // Fixed points theta0 and theta0 + pi; the lift at the second differs by exp(-2 pi i alpha).
  // dphi = -1: |det(1 - dphi)| = 2, trace on 1-forms -1.
  const double x1 = action.angle, x2 = action.angle + kPi;
  const cplx e1 = double(action.phase);
  const cplx e2 = e1 * std::polar(1.0, -2.0 * kPi * factor.alpha);
  const cplx forms = sum_weight(factor, weight, true);
  return forms * (multiplier_at(sigma, x1) * e1 + multiplier_at(sigma, x2) * e2) / 2.0;
}

MultiAdmissibleData quotient_weighted_trace(const QuotientGeometry& geom, const DegreeWeight& w1,
                                            const DegreeWeight& w2) {
  require_valid_geometry(geom);
  const DegreeWeight s1 = [w1](int q) { return (q % 2 ? -1.0 : 1.0) * w1(q); };
  const DegreeWeight s2 = [w2](int q) { return (q % 2 ? -1.0 : 1.0) * w2(q); };
  const double inv = 1.0 / double(geom.group.size());
  std::vector<SeparableTerm> terms;
  for (const auto& g : geom.group)
    terms.push_back({g.label, inv, twisted_trace_model(geom.factor1, g.f1, s1),
                     twisted_trace_model(geom.factor2, g.f2, s2)});
  return separable_data(std::move(terms));
}

Estimate<cplx> quotient_trace(const QuotientGeometry& geom, const DegreeWeight& w1, const DegreeWeight& w2,
                              double t1, double t2, double tol) {
  require_valid_geometry(geom);
  const DegreeWeight s1 = [w1](int q) { return (q % 2 ? -1.0 : 1.0) * w1(q); };
  const DegreeWeight s2 = [w2](int q) { return (q % 2 ? -1.0 : 1.0) * w2(q); };
  const double inv = 1.0 / double(geom.group.size());
  const double share = tol / (4.0 * geom.group.size());
  Estimate<cplx> out;
  for (const auto& g : geom.group) {
    auto a = factor_twisted_trace(geom.factor1, g.f1, s1, t1, share);
    auto b = factor_twisted_trace(geom.factor2, g.f2, s2, t2, share / (1.0 + std::abs(a.value)));
    out.value += inv * a.value * b.value;
    out.error += inv * (std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error);
  }
  return out;
}

CrossTermReport cross_term_check(const QuotientGeometry& geom, double tol) {
  CrossTermReport rep;
  const DegreeWeight one = unit_weight(), q = degree_weight();
  auto mt = [&](const DegreeWeight& a, const DegreeWeight& b) {
    auto r = multi_torsion(quotient_weighted_trace(geom, a, b), tol, MultiPath::Separable);
    rep.error += r.error;
    return r.value;
  };
  rep.one = mt(one, one);
  rep.q1 = mt(q, one);
  rep.q2 = mt(one, q);
  const double bound = 2.0 * tol + rep.error;
  rep.vanish = std::abs(rep.one) <= bound && std::abs(rep.q1) <= bound && std::abs(rep.q2) <= bound;
  return rep;
}

MultiTorsionResult quotient_multi_torsion(const QuotientGeometry& geom, double tol, MultiPath path) {
  return multi_torsion(quotient_weighted_trace(geom, degree_weight(), degree_weight()), tol, path);
}

}  // namespace torsionkit
