#include "torsionkit/numerics.hpp"

#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace torsionkit {

namespace quad {

const Rule& gk15() {
  static const Rule rule = [] {
    Rule r;
    const auto& x = boost::math::quadrature::gauss_kronrod<double, 15>::abscissa();
    const auto& wk = boost::math::quadrature::gauss_kronrod<double, 15>::weights();
    const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();
    r.x.assign(x.begin(), x.end());
    r.wk.assign(wk.begin(), wk.end());
    r.wg.assign(wg.begin(), wg.end());
    return r;
  }();
  return rule;
}

std::vector<double> linspace_breaks(double a, double b, int n) {
  if (n < 1) n = 1;
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = a + (b - a) * i / n;
  out.back() = b;
  return out;
}

}  // namespace quad

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

cplx gamma_right(cplx z) {
  z -= 1.0;
  cplx x = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) x += kLanczos[i] / (z + static_cast<double>(i));
  const cplx t = z + kLanczosG + 0.5;
  return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

bool nonpositive_integer(cplx z) {
  return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

}  // namespace

cplx gamma(cplx z) {
  if (nonpositive_integer(z)) throw DomainError("gamma: pole at a nonpositive integer");
  if (z.real() < 0.5) return kPi / (std::sin(kPi * z) * gamma_right(1.0 - z));
  return gamma_right(z);
}

cplx rgamma(cplx z) {
  if (nonpositive_integer(z)) return 0.0;
  if (z.real() < 0.5) return std::sin(kPi * z) * gamma_right(1.0 - z) / kPi;
  return 1.0 / gamma_right(z);
}

}  // namespace torsionkit
