#include "torsionkit/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace torsionkit {

namespace {

// Absolute truncation target for evaluators that carry no tolerance argument.
constexpr double kEvalTol = 1e-18;

double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

void check_t(double t, const char* where) {
  if (!(t > 0) || !std::isfinite(t)) throw DomainError(std::string(where) + ": t must be positive");
}

void check_tol(double tol, const char* where) {
  if (!(tol > 0)) throw DomainError(std::string(where) + ": tolerance must be positive");
}

void check_radius(double r, const char* where) {
  if (!(r > 0) || !std::isfinite(r)) throw DomainError(std::string(where) + ": radius must be positive");
}

}  // namespace

long LatticeFamily::zero_modes() const {
  for (double s : shifts)
    if (frac(s) != 0.0) return 0;
  return mult;
}

double LatticeFamily::smallest_nonzero() const {
  if (shifts.size() == 1) {
    double a = frac(shifts[0]);
    double d = a == 0.0 ? 1.0 : std::min(a, 1.0 - a);
    return d * d / (radius * radius);
  }
  double best = std::numeric_limits<double>::infinity();
  const double a = frac(shifts[0]), b = frac(shifts[1]);
  for (int k = -2; k <= 2; ++k)
    for (int l = -2; l <= 2; ++l) {
      double v = (k + a) * (k + a) + (l + b) * (l + b);
      if (v > 0) best = std::min(best, v);
    }
  return best / (radius * radius);
}

void LatticeFamily::validate() const {
  check_radius(radius, "LatticeFamily");
  if (shifts.size() != 1 && shifts.size() != 2)
    throw CapabilityError("LatticeFamily: only one- and two-dimensional lattices are supported");
  for (double s : shifts)
    if (!std::isfinite(s)) throw DomainError("LatticeFamily: shift must be finite");
  if (mult < 1) throw DomainError("LatticeFamily: multiplicity must be positive");
  if (sign != 0 && shifts.size() != 1) throw CapabilityError("LatticeFamily: signs need a 1-d lattice");
  if (sign < -1 || sign > 1) throw DomainError("LatticeFamily: sign must be -1, 0 or 1");
}

Spectrum Spectrum::finite(std::vector<Eigenvalue> entries, long kernel_dim) {
  Spectrum s;
  s.entries = std::move(entries);
  std::stable_sort(s.entries.begin(), s.entries.end(),
                   [](const Eigenvalue& a, const Eigenvalue& b) { return std::abs(a.lambda) < std::abs(b.lambda); });
  s.kernel_dim = kernel_dim;
  s.validate();
  return s;
}

Spectrum Spectrum::circle(double radius, double alpha) {
  check_radius(radius, "Spectrum::circle");
  Spectrum s;
  s.lattices.push_back({radius, {frac(alpha)}, 1, 0});
  return s;
}

Spectrum Spectrum::torus(double radius, double alpha, double beta) {
  check_radius(radius, "Spectrum::torus");
  Spectrum s;
  s.lattices.push_back({radius, {frac(alpha), frac(beta)}, 1, 0});
  return s;
}

long Spectrum::total_kernel() const {
  long k = kernel_dim;
  for (const auto& f : lattices) k += f.zero_modes();
  return k;
}

double Spectrum::smallest_nonzero() const {
  double best = std::numeric_limits<double>::infinity();
  if (!entries.empty()) best = entries.front().lambda;
  for (const auto& f : lattices) best = std::min(best, f.smallest_nonzero());
  return best;
}

void Spectrum::validate() const {
  if (kernel_dim < 0) throw DomainError("Spectrum: kernel_dim must be nonnegative");
  double prev = 0.0;
  for (const auto& e : entries) {
    if (!(e.lambda > 0) || !std::isfinite(e.lambda))
      throw DomainError("Spectrum: listed eigenvalues must be positive; zero modes go to kernel_dim");
    if (e.mult < 1) throw DomainError("Spectrum: multiplicities must be positive");
    if (e.lambda < prev) throw DomainError("Spectrum: entries must be sorted ascending");
    prev = e.lambda;
  }
  for (const auto& f : lattices) f.validate();
}

GradedSpectrum GradedSpectrum::circle_complex(double radius, double alpha) {
  GradedSpectrum g;
  g.per_degree = {Spectrum::circle(radius, alpha), Spectrum::circle(radius, alpha)};
  return g;
}

GradedSpectrum GradedSpectrum::torus_complex(double radius, double alpha, double beta) {
  GradedSpectrum g;
  Spectrum one = Spectrum::torus(radius, alpha, beta);
  Spectrum two = one;
  two.lattices[0].mult = 2;
  g.per_degree = {one, two, one};
  return g;
}

GradedSpectrum GradedSpectrum::dirac_circle(double radius, double a) {
  check_radius(radius, "GradedSpectrum::dirac_circle");
  GradedSpectrum g;
  Spectrum s;
  s.lattices.push_back({radius, {frac(a)}, 1, 1});
  g.per_degree = {s};
  g.signs = std::vector<std::vector<int>>{{}};
  return g;
}

bool GradedSpectrum::has_signs() const {
  if (!signs) return false;
  for (const auto& s : per_degree)
    for (const auto& f : s.lattices)
      if (f.sign == 0) return false;
  return true;
}

void GradedSpectrum::validate() const {
  if (per_degree.empty()) throw DomainError("GradedSpectrum: no degrees");
  for (const auto& s : per_degree) s.validate();
  if (signs) {
    if (signs->size() != per_degree.size())
      throw DomainError("GradedSpectrum: one sign list per degree required");
    for (std::size_t q = 0; q < per_degree.size(); ++q) {
      if ((*signs)[q].size() != per_degree[q].entries.size())
        throw DomainError("GradedSpectrum: one sign per spectral entry required");
      for (int s : (*signs)[q])
        if (s != 1 && s != -1) throw DomainError("GradedSpectrum: signs must be +1 or -1");
    }
  }
}

BigradedSpectrum BigradedSpectrum::product(const GradedSpectrum& a, const GradedSpectrum& b) {
  BigradedSpectrum out;
  auto listing = [](const Spectrum& s) {
    if (!s.is_finite()) throw CapabilityError("BigradedSpectrum::product: finite spectra required");
    std::vector<Eigenvalue> v = s.entries;
    if (s.kernel_dim > 0) v.push_back({0.0, s.kernel_dim});
    return v;
  };
  for (int q1 = 0; q1 <= a.top_degree(); ++q1)
    for (int q2 = 0; q2 <= b.top_degree(); ++q2) {
      auto& cell = out.per_bidegree[{q1, q2}];
      for (const auto& e1 : listing(a.per_degree[q1]))
        for (const auto& e2 : listing(b.per_degree[q2])) {
          if (e1.lambda == 0.0 && e2.lambda == 0.0)
            out.kernel += e1.mult * e2.mult;
          else
            cell.push_back({e1.lambda, e2.lambda, e1.mult * e2.mult});
        }
    }
  return out;
}

cplx BigradedSpectrum::trace(const std::function<double(int, int)>& weight, double t1, double t2) const {
  check_t(t1, "BigradedSpectrum::trace");
  check_t(t2, "BigradedSpectrum::trace");
  cplx sum = 0.0;
  for (const auto& [deg, list] : per_bidegree) {
    const double w = weight(deg.first, deg.second);
    if (w == 0.0) continue;
    double s = 0.0;
    for (const auto& e : list) s += e.mult * std::exp(-(t1 * e.mu1 + t2 * e.mu2));
    sum += w * s;
  }
  return sum;
}

DegreeWeight unit_weight() {
  return [](int) { return 1.0; };
}
DegreeWeight euler_weight() {
  return [](int q) { return q % 2 == 0 ? 1.0 : -1.0; };
}
DegreeWeight torsion_weight() {
  return [](int q) { return (q % 2 == 0 ? 1.0 : -1.0) * q; };
}

Estimate<double> theta_direct(double radius, double alpha, double t, double tol) {
  check_radius(radius, "theta_direct");
  check_t(t, "theta_direct");
  check_tol(tol, "theta_direct");
  const double a = frac(alpha), tau = t / (radius * radius);
  return gaussian_lattice_sum([&](long k) { return std::exp(-tau * (k + a) * (k + a)); }, -a, tau, 1.0,
                              tol);
}

Estimate<cplx> theta_dual(double radius, double alpha, double t, double tol) {
  check_radius(radius, "theta_dual");
  check_t(t, "theta_dual");
  check_tol(tol, "theta_dual");
  const double a = frac(alpha), beta = kPi * kPi * radius * radius / t;
  const double pre = radius * std::sqrt(kPi / t);
  return gaussian_lattice_sum(
      [&](long m) { return pre * std::exp(-beta * double(m) * double(m)) * std::polar(1.0, 2.0 * kPi * m * a); },
      0.0, beta, pre, tol);
}

Estimate<double> theta(double radius, double alpha, double t, double tol) {
  if (t >= radius * radius) return theta_direct(radius, alpha, t, tol);
  const double a = frac(alpha), beta = kPi * kPi * radius * radius / t;
  const double pre = radius * std::sqrt(kPi / t);
  check_tol(tol, "theta");
  return gaussian_lattice_sum(
      [&](long m) { return pre * std::exp(-beta * double(m) * double(m)) * std::cos(2.0 * kPi * m * a); }, 0.0,
      beta, pre, tol);
}

Estimate<double> theta_remainder(double radius, double alpha, double t, double tol) {
  check_radius(radius, "theta_remainder");
  check_t(t, "theta_remainder");
  check_tol(tol, "theta_remainder");
  const double a = frac(alpha), beta = kPi * kPi * radius * radius / t;
  const double pre = radius * std::sqrt(kPi / t);
  if (beta < 1.0) {
    auto d = theta_direct(radius, a, t, tol);
    return {d.value - pre, d.error + 4.0 * std::numeric_limits<double>::epsilon() * pre};
  }
  return gaussian_lattice_sum(
      [&](long m) {
        return m == 0 ? 0.0 : pre * std::exp(-beta * double(m) * double(m)) * std::cos(2.0 * kPi * m * a);
      },
      0.0, beta, pre, tol);
}

Estimate<cplx> twisted_theta(double radius, double alpha, double phi, double t, double tol) {
  check_radius(radius, "twisted_theta");
  check_t(t, "twisted_theta");
  check_tol(tol, "twisted_theta");
  const double a = frac(alpha), tau = t / (radius * radius);
  if (tau >= 1.0) {
    return gaussian_lattice_sum(
        [&](long k) { return std::polar(std::exp(-tau * (k + a) * (k + a)), k * phi); }, -a, tau, 1.0, tol);
  }
  // Poisson dual of f(x) = exp(i (x - a) phi - tau x^2) summed over x = k + a.
  const double pre = std::sqrt(kPi / tau), beta = kPi * kPi / tau, c = phi / (2.0 * kPi);
  const cplx shift = std::polar(1.0, -a * phi);
  auto sum = gaussian_lattice_sum(
      [&](long m) {
        const double d = m - c;
        return std::polar(pre * std::exp(-beta * d * d), 2.0 * kPi * m * a);
      },
      c, beta, pre, tol);
  return {shift * sum.value, sum.error};
}

Estimate<double> theta_moment(double radius, double alpha, double t, double tol) {
  check_radius(radius, "theta_moment");
  check_t(t, "theta_moment");
  check_tol(tol, "theta_moment");
  const double a = frac(alpha), tau = t / (radius * radius);
  if (tau >= 1.0) {
    const double amp = 1.0 / (radius * std::sqrt(std::exp(1.0) * tau));
    return gaussian_lattice_sum([&](long k) { return (k + a) / radius * std::exp(-tau * (k + a) * (k + a)); }, -a,
                                0.5 * tau, amp, tol);
  }
  // Dual: (1/r) sum_m (pi m / tau) sqrt(pi / tau) exp(-pi^2 m^2 / tau) sin(2 pi m a).
  const double beta = kPi * kPi / tau;
  const double pre = (kPi / tau) * std::sqrt(kPi / tau) / radius;
  const double amp = pre * std::sqrt(tau / (std::exp(1.0) * kPi * kPi));
  return gaussian_lattice_sum(
      [&](long m) { return pre * m * std::exp(-beta * double(m) * double(m)) * std::sin(2.0 * kPi * m * a); }, 0.0,
      0.5 * beta, amp, tol);
}

double direct_tail_bound(double radius, double alpha, double t, int K) {
  const double a = frac(alpha), tau = t / (radius * radius);
  auto side = [&](double D) { return std::exp(-tau * D * D) / (-std::expm1(-2.0 * tau * D)); };
  return side(K + 1 + a) + side(K + 1 - a);
}

int truncate_with_tail_bound(const LatticeFamily& family, double t, double tol) {
  family.validate();
  check_t(t, "truncate_with_tail_bound");
  check_tol(tol, "truncate_with_tail_bound");
  if (family.shifts.size() != 1) throw CapabilityError("truncate_with_tail_bound: 1-d lattice required");
  for (int K = 0;; ++K) {
    if (family.mult * direct_tail_bound(family.radius, family.shifts[0], t, K) < tol) return K;
    if (K > 100000000) throw AccuracyError("truncate_with_tail_bound: t too small for a direct sum");
  }
}

cplx poisson_dual_eval(double radius, double alpha, double t, double tol) {
  return theta_dual(radius, alpha, t, tol).value;
}

namespace {

// mult * (theta_a theta_b - zero modes) with propagated error.
Estimate<double> lattice_trace(const LatticeFamily& f, double t, double tol) {
  if (f.shifts.size() == 1) {
    auto th = theta(f.radius, f.shifts[0], t, tol / f.mult);
    return {f.mult * (th.value - (f.zero_modes() ? 1.0 : 0.0)), f.mult * th.error};
  }
  const double part = tol / (3.0 * f.mult * (1.0 + 4.0 * f.radius * std::sqrt(kPi / t) + 1.0 / t));
  auto a = theta(f.radius, f.shifts[0], t, part);
  auto b = theta(f.radius, f.shifts[1], t, part);
  const double err = std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error;
  return {f.mult * (a.value * b.value - (f.zero_modes() ? 1.0 : 0.0)), f.mult * err};
}

}  // namespace

Estimate<cplx> eval_trace(const Spectrum& spec, double t, double tol) {
  check_t(t, "eval_trace");
  check_tol(tol, "eval_trace");
  spec.validate();
  double sum = 0.0, mass = 0.0;
  for (auto it = spec.entries.rbegin(); it != spec.entries.rend(); ++it) {
    const double v = it->mult * std::exp(-t * it->lambda);
    sum += v;
    mass += v;
  }
  double err = 4.0 * std::numeric_limits<double>::epsilon() * mass;
  const double share = spec.lattices.empty() ? tol : tol / spec.lattices.size();
  for (const auto& f : spec.lattices) {
    auto v = lattice_trace(f, t, share);
    sum += v.value;
    err += v.error;
  }
  return {sum, err};
}

Estimate<cplx> eval_weighted_trace(const GradedSpectrum& spec, const DegreeWeight& weight, double t, double tol) {
  check_t(t, "eval_weighted_trace");
  check_tol(tol, "eval_weighted_trace");
  spec.validate();
  double wsum = 0.0;
  for (int q = 0; q <= spec.top_degree(); ++q) wsum += std::abs(weight(q));
  Estimate<cplx> out;
  if (wsum == 0.0) return out;
  for (int q = 0; q <= spec.top_degree(); ++q) {
    const double w = weight(q);
    if (w == 0.0) continue;
    auto v = eval_trace(spec.per_degree[q], t, tol / wsum);
    out.value += w * v.value;
    out.error += std::abs(w) * v.error;
  }
  return out;
}

cplx AdmissibleExpansion::coefficient(double power) const {
  for (const auto& term : terms)
    if (std::abs(term.power - power) < 1e-12) return term.coeff;
  return 0.0;
}

cplx AdmissibleExpansion::effective_coefficient(double power) const {
  cplx c = coefficient(power);
  if (std::abs(power) < 1e-12) c -= kernel_trace;
  return c;
}

void AdmissibleExpansion::add(double power, cplx coeff) {
  for (auto& term : terms)
    if (std::abs(term.power - power) < 1e-12) {
      term.coeff += coeff;
      return;
    }
  auto pos = std::lower_bound(terms.begin(), terms.end(), power,
                              [](const ExpansionTerm& e, double p) { return e.power < p; });
  terms.insert(pos, {power, coeff});
}

void AdmissibleExpansion::validate() const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!std::isfinite(terms[i].power)) throw DomainError("AdmissibleExpansion: non-finite power");
    if (i > 0 && !(terms[i].power > terms[i - 1].power))
      throw DomainError("AdmissibleExpansion: powers must be strictly increasing");
  }
  if (!(decay_rate > 0)) throw CapabilityError("AdmissibleExpansion: missing positive decay rate");
}

cplx HeatTraceModel::eval_remainder(double t) const {
  if (identically_zero) return 0.0;
  if (remainder) return remainder(t);
  cplx v = evaluator(t);
  for (const auto& term : expansion.terms) v -= term.coeff * std::pow(t, term.power);
  v += expansion.kernel_trace;
  return v;
}

double HeatTraceModel::max_power() const {
  return expansion.terms.empty() ? 0.0 : expansion.terms.back().power;
}

HeatTraceModel HeatTraceModel::zero() {
  HeatTraceModel m;
  m.evaluator = [](double) { return cplx{}; };
  m.remainder = m.evaluator;
  m.expansion.decay_rate = 1.0;
  m.remainder_order = 64.0;
  m.identically_zero = true;
  return m;
}

HeatTraceModel HeatTraceModel::exponential(double rate, int terms) {
  if (!(rate > 0)) throw DomainError("HeatTraceModel::exponential: rate must be positive");
  if (terms < 0) throw DomainError("HeatTraceModel::exponential: term count must be nonnegative");
  HeatTraceModel m;
  m.evaluator = [rate](double t) { return cplx(std::exp(-rate * t)); };
  double c = 1.0;
  for (int j = 0; j <= terms; ++j) {
    m.expansion.terms.push_back({double(j), c});
    c *= -rate / (j + 1);
  }
  m.remainder = [rate, terms](double t) {
    // Taylor tail sum_{j > J} (-rate t)^j / j!.
    const double x = -rate * t;
    double term = 1.0;
    for (int j = 1; j <= terms; ++j) term *= x / j;
    double sum = 0.0;
    for (int j = terms + 1; j < terms + 200; ++j) {
      term *= x / j;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    if (std::abs(x) > 1.0) {
      double head = 0.0, p = 1.0;
      for (int j = 0; j <= terms; ++j) {
        head += p;
        p *= x / (j + 1);
      }
      return cplx(std::exp(x) - head);
    }
    return cplx(sum);
  };
  m.expansion.decay_rate = rate;
  m.decay_constant = 1.0;
  m.remainder_order = terms + 1.0;
  return m;
}

HeatTraceModel HeatTraceModel::combine(const std::vector<std::pair<cplx, HeatTraceModel>>& parts) {
  std::vector<std::pair<cplx, HeatTraceModel>> live;
  for (const auto& p : parts)
    if (p.first != 0.0 && !p.second.identically_zero) live.push_back(p);
  if (live.empty()) return zero();
  if (live.size() == 1 && live[0].first == 1.0) return live[0].second;
  HeatTraceModel m;
  m.evaluator = [live](double t) {
    cplx v = 0.0;
    for (const auto& [c, f] : live) v += c * f.evaluator(t);
    return v;
  };
  m.remainder = [live](double t) {
    cplx v = 0.0;
    for (const auto& [c, f] : live) v += c * f.eval_remainder(t);
    return v;
  };
  m.expansion.decay_rate = std::numeric_limits<double>::infinity();
  m.remainder_order = std::numeric_limits<double>::infinity();
  for (const auto& [c, f] : live) {
    for (const auto& term : f.expansion.terms) m.expansion.add(term.power, c * term.coeff);
    m.expansion.kernel_trace += c * f.expansion.kernel_trace;
    m.expansion.decay_rate = std::min(m.expansion.decay_rate, f.expansion.decay_rate);
    m.decay_constant += std::abs(c) * f.decay_constant;
    m.remainder_order = std::min(m.remainder_order, f.remainder_order);
  }
  return m;
}

namespace {

HeatTraceModel finite_model(const std::vector<Eigenvalue>& entries, long kernel_dim,
                            const std::vector<double>& amplitude) {
  // amplitude[i] multiplies entry i (1 for traces, signed sqrt(lambda) for eta).
  HeatTraceModel m;
  auto ent = entries;
  auto amp = amplitude;
  m.evaluator = [ent, amp](double t) {
    double s = 0.0;
    for (std::size_t i = ent.size(); i-- > 0;) s += amp[i] * ent[i].mult * std::exp(-t * ent[i].lambda);
    return cplx(s);
  };
  m.remainder = [ent, amp](double t) {
    double s = 0.0;
    for (std::size_t i = ent.size(); i-- > 0;) s += amp[i] * ent[i].mult * std::expm1(-t * ent[i].lambda);
    return cplx(s);
  };
  double a0 = 0.0, c = 0.0;
  const double eps = ent.empty() ? 1.0 : ent.front().lambda;
  for (std::size_t i = 0; i < ent.size(); ++i) {
    a0 += amp[i] * ent[i].mult;
    c += std::abs(amp[i]) * ent[i].mult * std::exp(-(ent[i].lambda - eps));
  }
  m.expansion.terms.push_back({0.0, a0 + double(kernel_dim)});
  m.expansion.kernel_trace = double(kernel_dim);
  m.expansion.decay_rate = eps;
  m.decay_constant = c;
  m.remainder_order = 1.0;
  return m;
}

HeatTraceModel lattice_model(const LatticeFamily& f) {
  f.validate();
  HeatTraceModel m;
  const double r = f.radius;
  const double mult = double(f.mult);
  const double zero = f.zero_modes() ? 1.0 : 0.0;
  const double eps = f.smallest_nonzero();
  if (f.shifts.size() == 1) {
    const double a = f.shifts[0];
    m.evaluator = [=](double t) { return cplx(mult * (theta(r, a, t, kEvalTol).value - zero)); };
    m.remainder = [=](double t) { return cplx(mult * theta_remainder(r, a, t, kEvalTol).value); };
    m.expansion.terms.push_back({-0.5, mult * std::sqrt(kPi) * r});
    if (zero != 0.0) m.expansion.terms.push_back({0.0, 0.0});
    m.decay_constant = mult * std::exp(eps) * (theta(r, a, 1.0, kEvalTol).value - zero);
  } else {
    const double a = f.shifts[0], b = f.shifts[1];
    m.evaluator = [=](double t) {
      return cplx(mult * (theta(r, a, t, kEvalTol).value * theta(r, b, t, kEvalTol).value - zero));
    };
    m.remainder = [=](double t) {
      const double pre = r * std::sqrt(kPi / t);
      const double ra = theta_remainder(r, a, t, kEvalTol).value;
      const double rb = theta_remainder(r, b, t, kEvalTol).value;
      return cplx(mult * (pre * (ra + rb) + ra * rb));
    };
    m.expansion.terms.push_back({-1.0, mult * kPi * r * r});
    if (zero != 0.0) m.expansion.terms.push_back({0.0, 0.0});
    m.decay_constant =
        mult * std::exp(eps) * (theta(r, a, 1.0, kEvalTol).value * theta(r, b, 1.0, kEvalTol).value - zero);
  }
  m.expansion.kernel_trace = mult * zero;
  m.expansion.decay_rate = eps;
  m.remainder_order = 64.0;
  return m;
}

HeatTraceModel moment_model(const LatticeFamily& f) {
  f.validate();
  if (f.shifts.size() != 1 || f.sign == 0) throw CapabilityError("eta trace: lattice family carries no sign");
  HeatTraceModel m;
  const double r = f.radius, a = f.shifts[0], s = f.sign * double(f.mult);
  m.evaluator = [=](double t) { return cplx(s * theta_moment(r, a, t, kEvalTol).value); };
  m.remainder = m.evaluator;
  const double eps = f.smallest_nonzero();
  auto abs_moment = gaussian_lattice_sum(
      [&](long k) { return std::abs(k + a) / r * std::exp(-(k + a) * (k + a) / (r * r)); }, -a, 0.5 / (r * r),
      r / std::sqrt(std::exp(1.0)), 1e-16);
  m.expansion.decay_rate = eps;
  m.decay_constant = std::abs(s) * std::exp(eps) * abs_moment.value;
  m.remainder_order = 64.0;
  return m;
}

}  // namespace

HeatTraceModel trace_model(const Spectrum& spec) {
  spec.validate();
  std::vector<std::pair<cplx, HeatTraceModel>> parts;
  if (!spec.entries.empty() || spec.kernel_dim > 0)
    parts.push_back({1.0, finite_model(spec.entries, spec.kernel_dim,
                                       std::vector<double>(spec.entries.size(), 1.0))});
  for (const auto& f : spec.lattices) parts.push_back({1.0, lattice_model(f)});
  if (parts.empty()) return HeatTraceModel::zero();
  if (parts.size() == 1) {
    if (spec.entries.empty() && spec.lattices.empty()) {
      // Only zero modes: Tr' vanishes identically.
      HeatTraceModel z = HeatTraceModel::zero();
      z.expansion.terms.push_back({0.0, double(spec.kernel_dim)});
      z.expansion.kernel_trace = double(spec.kernel_dim);
      return z;
    }
    return parts[0].second;
  }
  return HeatTraceModel::combine(parts);
}

HeatTraceModel trace_model(const GradedSpectrum& spec, const DegreeWeight& weight) {
  spec.validate();
  std::vector<std::pair<cplx, HeatTraceModel>> parts;
  for (int q = 0; q <= spec.top_degree(); ++q) {
    const double w = weight(q);
    if (w != 0.0) parts.push_back({w, trace_model(spec.per_degree[q])});
  }
  return HeatTraceModel::combine(parts);
}

HeatTraceModel eta_trace_model(const GradedSpectrum& spec) {
  spec.validate();
  if (!spec.has_signs()) throw CapabilityError("eta: spectrum carries no sign data");
  if (spec.per_degree.size() != 1) throw CapabilityError("eta: a single-degree signed spectrum is required");
  const Spectrum& s = spec.per_degree[0];
  std::vector<std::pair<cplx, HeatTraceModel>> parts;
  if (!s.entries.empty()) {
    std::vector<double> amp(s.entries.size());
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = (*spec.signs)[0][i] * std::sqrt(s.entries[i].lambda);
    parts.push_back({1.0, finite_model(s.entries, 0, amp)});
  }
  for (const auto& f : s.lattices) parts.push_back({1.0, moment_model(f)});
  return HeatTraceModel::combine(parts);
}

}  // namespace torsionkit
