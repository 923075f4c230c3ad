#include "torsionkit/multizeta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace torsionkit {

namespace {

void check_tol(double tol, const char* where) {
  if (!(tol > 0)) throw DomainError(std::string(where) + ": tolerance must be positive");
}

// (power, effective coefficient) pairs of a model, including a bare kernel shift.
std::vector<std::pair<double, cplx>> effective_terms(const HeatTraceModel& m) {
  std::vector<std::pair<double, cplx>> out;
  if (m.identically_zero) return out;
  bool has_zero = false;
  for (const auto& term : m.expansion.terms) {
    const cplx c = m.expansion.effective_coefficient(term.power);
    if (std::abs(term.power) < 1e-12) has_zero = true;
    if (c != 0.0) out.push_back({term.power, c});
  }
  if (!has_zero && m.expansion.kernel_trace != 0.0) {
    out.push_back({0.0, -m.expansion.kernel_trace});
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  }
  return out;
}

const CoefficientFunction* find_term(const std::vector<CoefficientFunction>& v, double p) {
  for (const auto& c : v)
    if (std::abs(c.power - p) < 1e-12) return &c;
  return nullptr;
}

double sup_remainder(const HeatTraceModel& m) {
  double s = 0.0;
  for (int i = 0; i <= 60; ++i) s = std::max(s, std::abs(m.eval_remainder(std::pow(10.0, -3.0 + 3.0 * i / 60.0))));
  return s;
}

std::vector<double> unit_breaks(double a, double b) {
  const int n = std::max(1, static_cast<int>(std::ceil(b - a)));
  return quad::linspace_breaks(a, b, n);
}

// int int f(x1, x2) dx2 dx1 by nested adaptive quadrature.
template <class F>
Estimate<cplx> integrate2(F f, double a1, double b1, double a2, double b2, double tol) {
  if (!(b1 > a1) || !(b2 > a2)) return {};
  const double inner_tol = tol / (2.0 * (b1 - a1));
  double inner_err = 0.0;
  const auto breaks2 = unit_breaks(a2, b2);
  auto outer = quad::integrate(
      [&](double x1) {
        auto in = quad::integrate([&](double x2) { return f(x1, x2); }, breaks2, inner_tol);
        inner_err = std::max(inner_err, in.error);
        return in.value;
      },
      unit_breaks(a1, b1), tol / 2.0);
  return {outer.value, outer.error + (b1 - a1) * inner_err};
}

}  // namespace

cplx MultiAdmissibleData::a(double p, double q) const {
  if (const auto* c = find_term(t1_terms, p)) return c->model.expansion.effective_coefficient(q);
  return 0.0;
}

cplx MultiAdmissibleData::r(double t1, double t2) const {
  if (identically_zero) return 0.0;
  if (r_remainder) return r_remainder(t1, t2);
  cplx v = evaluator(t1, t2);
  for (const auto& c : t1_terms) v -= std::pow(t1, c.power) * c.model(t2);
  for (const auto& c : t2_terms) v -= std::pow(t2, c.power) * c.model(t1);
  for (const auto& c : t1_terms)
    for (const auto& [q, a] : effective_terms(c.model)) v += a * std::pow(t1, c.power) * std::pow(t2, q);
  return v;
}

cplx MultiAdmissibleData::s1(double t1, double t2) const {
  if (identically_zero) return 0.0;
  if (s1_remainder) return s1_remainder(t1, t2);
  cplx v = evaluator(t1, t2);
  for (const auto& c : t1_terms) v -= std::pow(t1, c.power) * c.model(t2);
  return v;
}

cplx MultiAdmissibleData::s2(double t1, double t2) const {
  if (identically_zero) return 0.0;
  if (s2_remainder) return s2_remainder(t1, t2);
  cplx v = evaluator(t1, t2);
  for (const auto& c : t2_terms) v -= std::pow(t2, c.power) * c.model(t1);
  return v;
}

void MultiAdmissibleData::validate() const {
  if (identically_zero) return;
  if (!evaluator) throw CapabilityError("MultiAdmissibleData: missing evaluator");
  if (!(eps1 > 0) || !(eps2 > 0)) throw CapabilityError("MultiAdmissibleData: missing decay rates");
  for (const auto& c : t1_terms) c.model.expansion.validate();
  for (const auto& c : t2_terms) c.model.expansion.validate();
  // The double coefficients seen from either variable must coincide.
  for (const auto& c1 : t1_terms)
    for (const auto& [q, a] : effective_terms(c1.model)) {
      const auto* c2 = find_term(t2_terms, q);
      const cplx b = c2 ? c2->model.expansion.effective_coefficient(c1.power) : cplx{};
      if (std::abs(a - b) > 1e-10 * (1.0 + std::abs(a)))
        throw ValidationError("MultiAdmissibleData: inconsistent double coefficients a_{p,q}");
    }
  for (const auto& c2 : t2_terms)
    for (const auto& [p, b] : effective_terms(c2.model))
      if (!find_term(t1_terms, p) && std::abs(b) > 1e-10)
        throw ValidationError("MultiAdmissibleData: inconsistent double coefficients a_{p,q}");
}

MultiAdmissibleData separable_data(std::vector<SeparableTerm> terms) {
  std::vector<SeparableTerm> live;
  for (auto& t : terms)
    if (t.weight != 0.0 && !t.f1.identically_zero && !t.f2.identically_zero) live.push_back(t);
  MultiAdmissibleData d;
  d.separable_form = terms;
  if (live.empty()) {
    d.identically_zero = true;
    d.evaluator = [](double, double) { return cplx{}; };
    d.eps1 = d.eps2 = 1.0;
    return d;
  }
  d.evaluator = [live](double t1, double t2) {
    cplx v = 0.0;
    for (const auto& t : live) v += t.weight * t.f1(t1) * t.f2(t2);
    return v;
  };
  d.r_remainder = [live](double t1, double t2) {
    cplx v = 0.0;
    for (const auto& t : live) v += t.weight * t.f1.eval_remainder(t1) * t.f2.eval_remainder(t2);
    return v;
  };
  d.s1_remainder = [live](double t1, double t2) {
    cplx v = 0.0;
    for (const auto& t : live) v += t.weight * t.f1.eval_remainder(t1) * t.f2(t2);
    return v;
  };
  d.s2_remainder = [live](double t1, double t2) {
    cplx v = 0.0;
    for (const auto& t : live) v += t.weight * t.f1(t1) * t.f2.eval_remainder(t2);
    return v;
  };
  std::map<double, std::vector<std::pair<cplx, HeatTraceModel>>> c1, c2;
  d.eps1 = d.eps2 = std::numeric_limits<double>::infinity();
  for (const auto& t : live) {
    for (const auto& [p, a] : effective_terms(t.f1)) c1[p].push_back({t.weight * a, t.f2});
    for (const auto& [q, a] : effective_terms(t.f2)) c2[q].push_back({t.weight * a, t.f1});
    d.eps1 = std::min(d.eps1, t.f1.expansion.decay_rate);
    d.eps2 = std::min(d.eps2, t.f2.expansion.decay_rate);
    const double b1 = std::max(decay_bound(t.f1), sup_remainder(t.f1) * std::exp(t.f1.expansion.decay_rate));
    const double b2 = std::max(decay_bound(t.f2), sup_remainder(t.f2) * std::exp(t.f2.expansion.decay_rate));
    d.decay_constant += std::abs(t.weight) * b1 * b2;
  }
  for (auto& [p, parts] : c1) d.t1_terms.push_back({p, HeatTraceModel::combine(parts)});
  for (auto& [q, parts] : c2) d.t2_terms.push_back({q, HeatTraceModel::combine(parts)});
  return d;
}

MultiZetaResult continue_multizeta_separable(const std::vector<SeparableTerm>& terms, double tol) {
  check_tol(tol, "continue_multizeta_separable");
  MultiZetaResult out;
  const double share = tol / std::max<std::size_t>(1, 2 * terms.size());
  for (const auto& t : terms) {
    if (t.weight == 0.0 || t.f1.identically_zero || t.f2.identically_zero) continue;
    const double w = std::abs(t.weight);
    auto z1 = continue_zeta(t.f1, share / w);
    auto z2 = continue_zeta(t.f2, share / (w * std::max(1.0, std::abs(z1.derivative_at_0))));
    z1 = std::abs(z2.derivative_at_0) > 1.0 ? continue_zeta(t.f1, share / (w * std::abs(z2.derivative_at_0))) : z1;
    out.value_at_origin += t.weight * z1.value_at_0 * z2.value_at_0;
    out.ds1_at_origin += t.weight * z1.derivative_at_0 * z2.value_at_0;
    out.ds2_at_origin += t.weight * z1.value_at_0 * z2.derivative_at_0;
    out.mixed_at_origin += t.weight * z1.derivative_at_0 * z2.derivative_at_0;
    out.error_bound += w * (std::abs(z1.derivative_at_0) * z2.error_bound +
                            std::abs(z2.derivative_at_0) * z1.error_bound + z1.error_bound * z2.error_bound);
  }
  return out;
}

MultiZetaResult continue_multizeta(const MultiAdmissibleData& h, double tol) {
  check_tol(tol, "continue_multizeta");
  h.validate();
  MultiZetaResult out;
  if (h.identically_zero) return out;

  // One-dimensional pieces: finite parts of the coefficient functions.
  const std::size_t n1d = h.t1_terms.size() + h.t2_terms.size();
  const double tol1 = tol / (4.0 * std::max<std::size_t>(1, n1d));
  cplx A = h.a(0.0, 0.0);
  cplx B0 = 0.0, C0 = 0.0, G = 0.0;
  double err = 0.0;
  for (const auto& c : h.t1_terms) {
    const double weight = std::abs(c.power) < 1e-12 ? 1.0 : 1.0 / std::abs(c.power);
    auto fp = finite_part_at_zero(c.model, tol1 / weight);
    if (std::abs(c.power) < 1e-12)
      B0 = fp.c0;
    else
      G += fp.c0 / c.power;
    err += weight * fp.error;
  }
  for (const auto& c : h.t2_terms) {
    const double weight = std::abs(c.power) < 1e-12 ? 1.0 : 1.0 / std::abs(c.power);
    auto fp = finite_part_at_zero(c.model, tol1 / weight);
    if (std::abs(c.power) < 1e-12)
      C0 = fp.c0;
    else
      G += (fp.remainder_integral + fp.tail_integral) / c.power;
    err += weight * fp.error;
  }

  // Two-dimensional pieces in log variables.
  const double budget = tol / 64.0;
  auto pick_cutoff = [&](double given, const std::vector<CoefficientFunction>& governing, bool first) {
    if (given > 0) return given;
    double delta = 1.0;
    for (const auto& c : governing)
      if (!c.model.identically_zero) delta = std::min(delta, remainder_cutoff(c.model, 0.0, budget));
    if (h.separable_form)
      for (const auto& t : *h.separable_form) {
        const auto& m = first ? t.f1 : t.f2;
        if (!m.identically_zero && t.weight != 0.0) delta = std::min(delta, remainder_cutoff(m, 0.0, budget));
      }
    return delta;
  };
  const double d1 = pick_cutoff(h.cutoff1, h.t2_terms, true);
  const double d2 = pick_cutoff(h.cutoff2, h.t1_terms, false);
  const double C = h.decay_constant > 0 ? h.decay_constant : 1.0;
  const double margin = (10.0 - std::log(d1 * d2)) * (1.0 + std::log1p(1.0 / std::min(h.eps1, h.eps2)));
  const double T1 = decay_cutoff(C, h.eps1, 0.0, budget / margin);
  const double T2 = decay_cutoff(C, h.eps2, 0.0, budget / margin);
  const double x1lo = std::log(d1), x2lo = std::log(d2), x1hi = std::log(T1), x2hi = std::log(T2);
  const double tol2 = tol / 8.0;

  auto r = integrate2([&](double x1, double x2) { return h.r(std::exp(x1), std::exp(x2)); }, x1lo, 0.0, x2lo, 0.0,
                      tol2);
  auto s1 = integrate2([&](double x1, double x2) { return h.s1(std::exp(x1), std::exp(x2)); }, x1lo, 0.0, 0.0,
                       x2hi, tol2);
  auto s2 = integrate2([&](double x1, double x2) { return h.s2(std::exp(x1), std::exp(x2)); }, 0.0, x1hi, x2lo,
                       0.0, tol2);
  auto hh = integrate2([&](double x1, double x2) { return h(std::exp(x1), std::exp(x2)); }, 0.0, x1hi, 0.0, x2hi,
                       tol2);
  G += r.value + s1.value + s2.value + hh.value;
  err += r.error + s1.error + s2.error + hh.error + 8.0 * budget;

  // zeta = f u(s1) u(s2) with u(s) = 1/(s Gamma(s)) = 1 + gamma s + O(s^2) and
  // f = A/(s1 s2) + B(s2)/s1 + C(s1)/s2 + G(s1, s2).
  const double g = kEulerGamma;
  out.value_at_origin = A;
  out.ds1_at_origin = C0 + g * A;
  out.ds2_at_origin = B0 + g * A;
  out.mixed_at_origin = G + g * (B0 + C0) + g * g * A;
  out.error_bound = err;
  return out;
}

MultiTorsionResult multi_torsion(const MultiAdmissibleData& h, double tol, MultiPath path) {
  check_tol(tol, "multi_torsion");
  MultiTorsionResult out;
  if (path != MultiPath::Separable) {
    auto z = continue_multizeta(h, 4.0 * tol);
    out.generic = 0.25 * z.mixed_at_origin.real();
    out.imaginary_part = 0.25 * z.mixed_at_origin.imag();
    out.value = *out.generic;
    out.error = 0.25 * z.error_bound;
  }
  if (path != MultiPath::Generic) {
    if (!h.separable_form) {
      if (path == MultiPath::Separable) throw CapabilityError("multi_torsion: input has no separable form");
    } else {
      auto z = continue_multizeta_separable(*h.separable_form, 4.0 * tol);
      out.separable = 0.25 * z.mixed_at_origin.real();
      if (!out.generic) {
        out.value = *out.separable;
        out.error = 0.25 * z.error_bound;
        out.imaginary_part = 0.25 * z.mixed_at_origin.imag();
      }
    }
  }
  if (out.generic && out.separable) out.paths_agree = std::abs(*out.generic - *out.separable) <= 2.0 * tol;
  return out;
}

}  // namespace torsionkit
