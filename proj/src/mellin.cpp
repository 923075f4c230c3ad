#include "torsionkit/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace torsionkit {

namespace {

void check_tol(double tol, const char* where) {
  if (!(tol > 0)) throw DomainError(std::string(where) + ": tolerance must be positive");
}

void check_model(const HeatTraceModel& h) {
  if (h.identically_zero) return;
  if (!h.evaluator) throw CapabilityError("heat trace model has no evaluator");
  h.expansion.validate();
  if (!(h.remainder_order > 0)) throw CapabilityError("heat trace model: remainder order must be positive");
}

double decay_constant_of(const HeatTraceModel& h) {
  if (h.decay_constant > 0) return h.decay_constant;
  const double eps = h.expansion.decay_rate;
  return 2.0 * std::exp(eps) * std::max(std::abs(h(1.0)), std::abs(h(2.0)) * std::exp(eps)) + 1e-300;
}

// Lower cutoff delta with int_0^delta |R(t)| t^{sigma-1} dt below budget,
// assuming |R(t)| ~ t^K there.
double small_cutoff(const HeatTraceModel& h, double sigma, double budget) {
  const double K = h.remainder_order + sigma;
  if (!(K > 0)) throw DomainError("Mellin transform: Re s outside the region of convergence");
  double delta = 0.5;
  for (int i = 0; i < 2000; ++i) {
    const double r = std::abs(h.eval_remainder(delta));
    const double est = r * std::pow(delta, sigma) / K;
    if (est <= budget) return delta;
    if (!h.remainder) {
      double noise = 0.0;
      for (const auto& term : h.expansion.terms) noise += std::abs(term.coeff) * std::pow(delta, term.power);
      noise *= 1e-15;
      if (noise * std::pow(delta, sigma) / K > budget)
        throw AccuracyError("Mellin transform: cancellation noise in the subtracted remainder exceeds tol");
    }
    delta *= 0.5;
    if (delta < 1e-300) break;
  }
  throw AccuracyError("Mellin transform: remainder does not vanish as t -> 0");
}

// Upper cutoff T with int_T^inf C t^{sigma-1} exp(-eps t) dt below budget.
double tail_cutoff(double C, double eps, double sigma, double budget) {
  auto bound = [&](double T) {
    const double slack = eps - std::max(0.0, sigma - 1.0) / T;
    if (slack <= 0.5 * eps) return std::numeric_limits<double>::infinity();
    return C * std::pow(T, sigma - 1.0) * std::exp(-eps * T) / slack;
  };
  double T = 1.0;
  while (bound(T) > budget) {
    T *= 1.2;
    if (T > 1e12) throw AccuracyError("Mellin transform: decay too slow for the requested tolerance");
  }
  return T;
}

std::vector<double> unit_breaks(double a, double b) {
  const int n = std::max(1, static_cast<int>(std::ceil(b - a)));
  return quad::linspace_breaks(a, b, n);
}

struct SplitIntegrals {
  Estimate<cplx> lower, upper;
};

// int_0^1 t^{s-1} R(t) dt and int_1^inf t^{s-1} h(t) dt in the variable x = log t.
SplitIntegrals split_integrals(const HeatTraceModel& h, cplx s, double tol) {
  const double sigma = s.real();
  const double budget = tol / 8.0;
  const double delta = small_cutoff(h, sigma, budget);
  const double eps = h.expansion.decay_rate;
  const double T = tail_cutoff(decay_constant_of(h), eps, sigma, budget);
  SplitIntegrals out;
  out.lower = quad::integrate(
      [&](double x) {
        const double t = std::exp(x);
        return std::exp(s * x) * h.eval_remainder(t);
      },
      unit_breaks(std::log(delta), 0.0), tol / 4.0);
  out.lower.error += budget;
  out.upper = quad::integrate(
      [&](double x) {
        const double t = std::exp(x);
        return std::exp(s * x) * h(t);
      },
      unit_breaks(0.0, std::log(T)), tol / 4.0);
  out.upper.error += budget;
  return out;
}

}  // namespace

double remainder_cutoff(const HeatTraceModel& h, double sigma, double budget) {
  return small_cutoff(h, sigma, budget);
}

double decay_cutoff(double C, double eps, double sigma, double budget) {
  return tail_cutoff(C, eps, sigma, budget);
}

double decay_bound(const HeatTraceModel& h) { return decay_constant_of(h); }

FinitePart finite_part_at_zero(const HeatTraceModel& h, double tol) {
  check_tol(tol, "finite_part_at_zero");
  check_model(h);
  FinitePart fp;
  if (h.identically_zero) return fp;
  fp.pole = h.expansion.effective_coefficient(0.0);
  for (const auto& term : h.expansion.terms)
    if (std::abs(term.power) > 1e-12) fp.power_sum += h.expansion.effective_coefficient(term.power) / term.power;
  auto parts = split_integrals(h, 0.0, tol);
  fp.remainder_integral = parts.lower.value;
  fp.tail_integral = parts.upper.value;
  fp.c0 = fp.remainder_integral + fp.tail_integral + fp.power_sum;
  fp.error = parts.lower.error + parts.upper.error;
  return fp;
}

Estimate<cplx> mellin_transform(const HeatTraceModel& h, cplx s, double tol) {
  check_tol(tol, "mellin_transform");
  check_model(h);
  if (h.identically_zero) return {};
  cplx poles = 0.0;
  for (const auto& term : h.expansion.terms) {
    const cplx a = h.expansion.effective_coefficient(term.power);
    if (a == 0.0) continue;
    if (std::abs(s + term.power) < 1e-14) throw DomainError("mellin_transform: s is a pole");
    poles += a / (s + term.power);
  }
  const bool has_t0 = std::any_of(h.expansion.terms.begin(), h.expansion.terms.end(),
                                  [](const ExpansionTerm& t) { return t.power == 0.0; });
  if (std::abs(h.expansion.kernel_trace) > 0 && !has_t0) {
    const cplx a = -h.expansion.kernel_trace;
    if (std::abs(s) < 1e-14) throw DomainError("mellin_transform: s is a pole");
    poles += a / s;
  }
  auto parts = split_integrals(h, s, tol);
  return {parts.lower.value + parts.upper.value + poles, parts.lower.error + parts.upper.error};
}

Estimate<cplx> zeta_value(const HeatTraceModel& h, cplx s, double tol) {
  if (h.identically_zero) return {};
  if (s.imag() == 0.0 && s.real() <= 0.0 && s.real() == std::floor(s.real())) {
    // zeta(-n) = (-1)^n n! a_n.
    const int n = static_cast<int>(-s.real());
    double fact = 1.0;
    for (int j = 2; j <= n; ++j) fact *= j;
    return {(n % 2 ? -1.0 : 1.0) * fact * h.expansion.effective_coefficient(double(n)), 0.0};
  }
  auto I = mellin_transform(h, s, tol / std::max(1.0, std::abs(rgamma(s))));
  const cplx rg = rgamma(s);
  return {I.value * rg, I.error * std::abs(rg)};
}

cplx contour_residue(const HeatTraceModel& h, double power, double radius, double tol, int nodes) {
  cplx sum = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const cplx w = std::polar(1.0, 2.0 * kPi * (j + 0.5) / nodes);
    sum += mellin_transform(h, -power + radius * w, tol).value * w;
  }
  return sum * radius / double(nodes);
}

ZetaResult continue_zeta(const HeatTraceModel& h, double tol) {
  check_tol(tol, "continue_zeta");
  check_model(h);
  ZetaResult z;
  if (h.identically_zero) {
    z.evaluator = [](cplx) { return cplx{}; };
    return z;
  }
  auto fp = finite_part_at_zero(h, tol);
  z.value_at_0 = fp.pole;
  z.finite_part = fp.c0;
  z.derivative_at_0 = fp.c0 + kEulerGamma * fp.pole;
  z.error_bound = fp.error;
  for (const auto& term : h.expansion.terms) {
    const cplx a = h.expansion.effective_coefficient(term.power);
    if (a != 0.0) z.residues.push_back({-term.power, a});
  }
  if (h.expansion.coefficient(0.0) == 0.0 && h.expansion.kernel_trace != 0.0)
    z.residues.push_back({0.0, -h.expansion.kernel_trace});
  const cplx v0 = z.value_at_0;
  z.evaluator = [h, tol, v0](cplx s) {
    if (s == 0.0) return v0;
    return zeta_value(h, s, tol).value;
  };
  return z;
}

LogDetResult log_det(const Spectrum& spec, double tol) {
  auto z = continue_zeta(trace_model(spec), tol);
  return {-z.derivative_at_0.real(), z.error_bound, z.value_at_0};
}

TorsionResult log_torsion(const GradedSpectrum& spec, double tol) {
  check_tol(tol, "log_torsion");
  spec.validate();
  TorsionResult out;
  auto direct = continue_zeta(trace_model(spec, torsion_weight()), tol / 2.0);
  out.value = 0.5 * direct.derivative_at_0.real();
  double err2 = 0.0;
  const auto w = torsion_weight();
  int active = 0;
  for (int q = 0; q <= spec.top_degree(); ++q)
    if (w(q) != 0.0) ++active;
  for (int q = 0; q <= spec.top_degree(); ++q) {
    if (w(q) == 0.0) continue;
    auto ld = log_det(spec.per_degree[q], tol / (2.0 * std::max(1, active) * std::abs(w(q))));
    out.via_determinants += -0.5 * w(q) * ld.value;
    err2 += 0.5 * std::abs(w(q)) * ld.error;
  }
  out.error = std::max(0.5 * direct.error_bound, err2);
  out.routes_agree = std::abs(out.value - out.via_determinants) <= 2.0 * tol;
  return out;
}

Estimate<double> eta_invariant(const GradedSpectrum& spec, double tol) {
  check_tol(tol, "eta_invariant");
  auto h = eta_trace_model(spec);
  if (h.identically_zero) return {};
  if (std::abs(h.expansion.coefficient(-0.5)) > 1e-14)
    throw DomainError("eta_invariant: t^{-1/2} coefficient present, eta(s) has a pole at s = 0");
  auto I = mellin_transform(h, 0.5, tol * std::sqrt(kPi));
  return {I.value.real() / std::sqrt(kPi), I.error / std::sqrt(kPi)};
}

cplx variation_coefficient(const HeatTraceModel& h, double power) {
  return h.expansion.effective_coefficient(power);
}

double eta_variation_rate(cplx coefficient) {
  return -2.0 / std::sqrt(kPi) * coefficient.real();
}

}  // namespace torsionkit
