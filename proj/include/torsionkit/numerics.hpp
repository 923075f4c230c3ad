#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "torsionkit/errors.hpp"

namespace torsionkit {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;

// Value with an absolute error bound.
template <class V>
struct Estimate {
  V value{};
  double error = 0.0;
};

namespace quad {

// Gauss-Kronrod 7/15 nodes on [-1, 1]: abscissae x_0 = 0 < x_1 < ... < x_7,
// Gauss nodes are the even-indexed ones.
struct Rule {
  std::vector<double> x, wk, wg;
};
const Rule& gk15();

template <class V>
struct PanelResult {
  double a, b;
  V value;
  double err;
  double l1;
};

template <class F>
auto gk_panel(F& f, double a, double b) {
  using V = decltype(f(a));
  const Rule& r = gk15();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  V fc = f(c);
  V k = fc * r.wk[0];
  V g = fc * r.wg[0];
  double l1 = std::abs(fc) * r.wk[0];
  for (std::size_t i = 1; i < r.x.size(); ++i) {
    V f1 = f(c - h * r.x[i]);
    V f2 = f(c + h * r.x[i]);
    k += (f1 + f2) * r.wk[i];
    l1 += (std::abs(f1) + std::abs(f2)) * r.wk[i];
    if (i % 2 == 0) g += (f1 + f2) * r.wg[i / 2];
  }
  return PanelResult<V>{a, b, k * h, std::abs((k - g) * h), l1 * std::abs(h)};
}

// Globally adaptive Gauss-Kronrod integration with an absolute error target.
// breaks: sorted initial panel boundaries (at least two).
template <class F>
auto integrate(F f, const std::vector<double>& breaks, double tol, int max_panels = 4000) {
  using V = decltype(f(breaks.front()));
  if (breaks.size() < 2) throw DomainError("integrate: need at least two break points");
  if (!(tol > 0)) throw DomainError("integrate: tolerance must be positive");
  auto cmp = [](const PanelResult<V>& l, const PanelResult<V>& r) { return l.err < r.err; };
  std::priority_queue<PanelResult<V>, std::vector<PanelResult<V>>, decltype(cmp)> heap(cmp);
  double err = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    auto p = gk_panel(f, breaks[i], breaks[i + 1]);
    err += p.err;
    l1 += p.l1;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  auto floor_of = [&]() { return 64.0 * std::numeric_limits<double>::epsilon() * l1; };
  while (err > std::max(tol, floor_of()) && !heap.empty()) {
    if (panels >= max_panels) {
      throw AccuracyError("integrate: error estimate " + std::to_string(err) +
                          " above target " + std::to_string(tol) + " after " +
                          std::to_string(panels) + " panels");
    }
    auto worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    auto left = gk_panel(f, worst.a, m);
    auto right = gk_panel(f, m, worst.b);
    err += left.err + right.err - worst.err;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Sum in panel order so results do not depend on heap internals.
  std::vector<PanelResult<V>> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  V total{};
  double total_err = 0.0;
  for (const auto& p : all) {
    total += p.value;
    total_err += p.err;
  }
  return Estimate<V>{total, std::max(total_err, floor_of())};
}

template <class F>
auto integrate(F f, double a, double b, double tol, int max_panels = 4000) {
  return integrate(f, std::vector<double>{a, b}, tol, max_panels);
}

// Evenly spaced break points, n panels.
std::vector<double> linspace_breaks(double a, double b, int n);

}  // namespace quad

// Sum over m in Z of term(m), where |term(m)| <= amp * exp(-beta (m - center)^2).
// Terms with |m - center| > K are dropped; the dropped tail is bounded by
// 2 amp exp(-beta K^2) / (1 - exp(-2 beta K)) and reported as the error.
template <class F>
auto gaussian_lattice_sum(F term, double center, double beta, double amp, double tol) {
  using V = decltype(term(0L));
  if (!(beta > 0)) throw DomainError("gaussian_lattice_sum: width parameter must be positive");
  auto tail = [&](double K) {
    return 2.0 * amp * std::exp(-beta * K * K) / (-std::expm1(-2.0 * beta * K));
  };
  double K = 1.0;
  while (tail(K) > tol) {
    K += 1.0;
    if (K > 1e7) throw AccuracyError("gaussian_lattice_sum: truncation index exceeds 1e7");
  }
  const long lo = static_cast<long>(std::ceil(center - K));
  const long hi = static_cast<long>(std::floor(center + K));
  // Accumulate from the outside in so the small terms are added first.
  V left{}, right{};
  const long mid = static_cast<long>(std::llround(center));
  for (long m = lo; m < mid; ++m) left += term(m);
  for (long m = hi; m >= mid; --m) right += term(m);
  return Estimate<V>{left + right, tail(K)};
}

// Gamma function for complex arguments (Lanczos, g = 7, 9 terms, reflection
// for Re z < 1/2). Relative error about 1e-15 on the strips used here.
cplx gamma(cplx z);
// 1/Gamma(z), entire; exact zeros at the nonpositive integers.
cplx rgamma(cplx z);

}  // namespace torsionkit
