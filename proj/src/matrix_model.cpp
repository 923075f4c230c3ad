#include "torsionkit/matrix_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace torsionkit {

namespace {

using Rng = std::mt19937_64;

Mat gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

Mat hermitian(int n, Rng& rng) {
  Mat g = gaussian(n, n, rng);
  return 0.5 * (g + g.adjoint());
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double sign_of(int q) { return q % 2 ? -1.0 : 1.0; }

// sum_i w_i X_ii
cplx weighted_trace(const Eigen::VectorXcd& w, const Mat& x) {
  cplx s = 0.0;
  for (int i = 0; i < x.rows(); ++i) s += w(i) * x(i, i);
  return s;
}

Eigen::VectorXcd parity(const GradedComplex& c) {
  return grading_diagonal(c, [](int q) { return sign_of(q); });
}

Mat metric_inverse(const Mat& h) {
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return llt.solve(Mat::Identity(h.rows(), h.cols()));
}

}  // namespace

int GradedComplex::top_degree() const {
  int t = 0;
  for (int q : degree) t = std::max(t, q);
  return t;
}

std::vector<int> GradedComplex::dims() const {
  std::vector<int> out(top_degree() + 1, 0);
  for (int q : degree) ++out[q];
  return out;
}

std::vector<int> GradedComplex::indices(int q) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (degree[i] == q) out.push_back(i);
  return out;
}

Mat GradedComplex::block(int q) const { return d(indices(q + 1), indices(q)); }

double GradedComplex::closure_defect() const {
  const double n = d.norm();
  return n == 0.0 ? 0.0 : (d * d).norm() / (n * n);
}

void GradedComplex::validate() const {
  if (d.rows() != size() || d.cols() != size()) throw ValidationError("complex: differential has the wrong shape");
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      if (d(i, j) != 0.0 && degree[i] != degree[j] + 1)
        throw ValidationError("complex: differential must raise the degree by one");
  if (closure_defect() > 1e-12) throw ValidationError("complex: d^2 does not vanish");
}

GradedComplex GradedComplex::from_blocks(const std::vector<Mat>& d_q) {
  if (d_q.empty()) throw ValidationError("complex: at least one differential block is required");
  std::vector<int> dims{static_cast<int>(d_q[0].cols())};
  for (std::size_t q = 0; q < d_q.size(); ++q) {
    if (d_q[q].cols() != dims.back()) throw ValidationError("complex: block dimensions do not chain");
    dims.push_back(static_cast<int>(d_q[q].rows()));
  }
  GradedComplex c;
  std::vector<int> offset{0};
  for (std::size_t q = 0; q < dims.size(); ++q) {
    for (int i = 0; i < dims[q]; ++i) c.degree.push_back(static_cast<int>(q));
    offset.push_back(offset.back() + dims[q]);
  }
  c.d = Mat::Zero(c.size(), c.size());
  for (std::size_t q = 0; q < d_q.size(); ++q) c.d.block(offset[q + 1], offset[q], dims[q + 1], dims[q]) = d_q[q];
  c.validate();
  return c;
}

GradedComplex GradedComplex::random(const std::vector<int>& dims, const std::vector<int>& ranks, std::uint64_t seed) {
  if (dims.size() < 2 || ranks.size() + 1 != dims.size())
    throw ValidationError("random complex: need dims n_0..n_r and ranks of d_0..d_{r-1}");
  for (std::size_t q = 0; q < dims.size(); ++q) {
    const int in = q > 0 ? ranks[q - 1] : 0, out = q < ranks.size() ? ranks[q] : 0;
    if (dims[q] < 1 || in < 0 || out < 0 || in + out > dims[q]) throw ValidationError("random complex: ranks do not fit");
  }
  Rng rng(seed);
  std::vector<Mat> S;
  for (int n : dims) S.push_back(Mat::Identity(n, n) + 0.4 / std::sqrt(double(n)) * gaussian(n, n, rng));
  std::vector<Mat> blocks;
  for (std::size_t q = 0; q + 1 < dims.size(); ++q) {
    Mat P = Mat::Zero(dims[q + 1], dims[q]);
    const int shift = q > 0 ? ranks[q - 1] : 0;
    for (int i = 0; i < ranks[q]; ++i) P(i, shift + i) = 1.0;
    blocks.push_back(S[q + 1] * P * S[q].partialPivLu().solve(Mat::Identity(dims[q], dims[q])));
  }
  // Rounding leaves d d at 1e-16; the validation threshold is far above that.
  return from_blocks(blocks);
}

GradedComplex GradedComplex::random_acyclic(const std::vector<int>& dims, std::uint64_t seed) {
  std::vector<int> ranks;
  int prev = 0;
  for (std::size_t q = 0; q + 1 < dims.size(); ++q) {
    ranks.push_back(dims[q] - prev);
    prev = ranks.back();
  }
  if (dims.empty() || prev != dims.back()) throw ValidationError("random_acyclic: Euler characteristic must vanish");
  return random(dims, ranks, seed);
}

GradedComplex GradedComplex::tensor(const GradedComplex& a, const GradedComplex& b) {
  GradedComplex c;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      c.degree.push_back(a.degree[i] + b.degree[j]);
      c.degree1.push_back(a.degree[i]);
      c.degree2.push_back(b.degree[j]);
    }
  Mat sigma = Mat::Zero(a.size(), a.size());
  for (int i = 0; i < a.size(); ++i) sigma(i, i) = sign_of(a.degree[i]);
  c.d = kron(a.d, Mat::Identity(b.size(), b.size())) + kron(sigma, b.d);
  c.n1 = a.top_degree();
  c.n2 = b.top_degree();
  c.validate();
  return c;
}

MetricFamily MetricFamily::constant(const Mat& h0, int nparams) {
  MetricFamily f;
  f.nparams = nparams;
  f.h = [h0](const Params&) { return h0; };
  f.dh = [h0](const Params&, int) { return Mat(Mat::Zero(h0.rows(), h0.cols())); };
  f.lower.assign(nparams, -1e6);
  f.upper.assign(nparams, 1e6);
  return f;
}

MetricFamily MetricFamily::random(const GradedComplex& c, int nparams, std::uint64_t seed, double spread) {
  Rng rng(seed);
  struct Block {
    std::vector<int> idx;
    Mat A0;
    std::vector<Mat> A1, A2;
  };
  std::vector<Block> blocks;
  for (int q = 0; q <= c.top_degree(); ++q) {
    Block b;
    b.idx = c.indices(q);
    const int m = static_cast<int>(b.idx.size());
    b.A0 = Mat::Identity(m, m) + 0.3 / std::sqrt(double(m)) * gaussian(m, m, rng);
    for (int i = 0; i < nparams; ++i) {
      b.A1.push_back(spread / std::sqrt(double(m)) * gaussian(m, m, rng));
      b.A2.push_back(0.5 * spread / std::sqrt(double(m)) * gaussian(m, m, rng));
    }
    blocks.push_back(std::move(b));
  }
  const int n = c.size();
  auto A = [blocks](const Block& b, const Params& u) {
    Mat a = b.A0;
    for (std::size_t i = 0; i < u.size(); ++i) a += u[i] * b.A1[i] + u[i] * u[i] * b.A2[i];
    return a;
  };
  MetricFamily f;
  f.nparams = nparams;
  f.h = [blocks, n, A](const Params& u) {
    Mat h = Mat::Zero(n, n);
    for (const auto& b : blocks) {
      const Mat a = A(b, u);
      h(b.idx, b.idx) = a * a.adjoint() + 0.2 * Mat::Identity(a.rows(), a.cols());
    }
    return h;
  };
  f.dh = [blocks, n, A](const Params& u, int i) {
    Mat dh = Mat::Zero(n, n);
    for (const auto& b : blocks) {
      const Mat a = A(b, u);
      const Mat da = b.A1[i] + 2.0 * u[i] * b.A2[i];
      dh(b.idx, b.idx) = da * a.adjoint() + a * da.adjoint();
    }
    return dh;
  };
  f.lower.assign(nparams, -1.0);
  f.upper.assign(nparams, 1.0);
  return f;
}

MetricFamily MetricFamily::exponential(const Mat& h0, const std::vector<double>& rates) {
  if (static_cast<int>(rates.size()) != h0.rows()) throw ValidationError("exponential family: one rate per basis vector");
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rates.data(), rates.size());
  MetricFamily f;
  f.nparams = 1;
  auto E = [r](double u) { return Mat((r * u).array().exp().cast<cplx>().matrix().asDiagonal()); };
  f.h = [h0, E](const Params& u) { return Mat(E(u[0]) * h0 * E(u[0])); };
  f.dh = [h0, E, r](const Params& u, int) {
    const Mat R = r.cast<cplx>().asDiagonal();
    const Mat h = E(u[0]) * h0 * E(u[0]);
    return Mat(R * h + h * R);
  };
  f.lower = {-3.0};
  f.upper = {3.0};
  return f;
}

MetricFamily MetricFamily::scaling(const GradedComplex& c, const Mat& h0, double shift) {
  Eigen::VectorXd e(c.size());
  for (int i = 0; i < c.size(); ++i) e(i) = c.degree[i] - shift;
  MetricFamily f;
  f.nparams = 1;
  auto D = [e](double t) { return Mat((0.5 * e * std::log(t)).array().exp().cast<cplx>().matrix().asDiagonal()); };
  f.h = [h0, D](const Params& u) { return Mat(D(u[0]) * h0 * D(u[0])); };
  f.dh = [h0, D, e](const Params& u, int) {
    const Mat h = D(u[0]) * h0 * D(u[0]);
    const Mat W = (e / u[0]).cast<cplx>().asDiagonal();
    return Mat(0.5 * (W * h + h * W));
  };
  f.lower = {1e-3};
  f.upper = {1e3};
  return f;
}

MetricFamily MetricFamily::product(const MetricFamily& f1, const MetricFamily& f2) {
  MetricFamily f;
  const int p1 = f1.nparams;
  f.nparams = p1 + f2.nparams;
  f.split = p1;
  auto part = [p1](const Params& u, bool first) {
    return first ? Params(u.begin(), u.begin() + p1) : Params(u.begin() + p1, u.end());
  };
  f.h = [=](const Params& u) { return kron(f1.h(part(u, true)), f2.h(part(u, false))); };
  f.dh = [=](const Params& u, int i) {
    if (i < p1) return kron(f1.dh(part(u, true), i), f2.h(part(u, false)));
    return kron(f1.h(part(u, true)), f2.dh(part(u, false), i - p1));
  };
  f.lower = f1.lower;
  f.lower.insert(f.lower.end(), f2.lower.begin(), f2.lower.end());
  f.upper = f1.upper;
  f.upper.insert(f.upper.end(), f2.upper.begin(), f2.upper.end());
  return f;
}

Mat MetricFamily::b(const Params& u, int i) const {
  Eigen::LLT<Mat> llt(h(u));
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return llt.solve(dh(u, i));
}

void MetricFamily::check_interior(const Params& u, double margin) const {
  if (static_cast<int>(u.size()) != nparams) throw DomainError("parameter vector has the wrong length");
  for (int i = 0; i < nparams; ++i)
    if (u[i] - margin < lower[i] || u[i] + margin > upper[i])
      throw DomainError("parameter point too close to the domain boundary");
}

HermitianFamily HermitianFamily::random(int n, int nparams, std::uint64_t seed) {
  Rng rng(seed);
  Mat H0 = hermitian(n, rng);
  std::vector<Mat> H1, H2;
  for (int i = 0; i < nparams; ++i) {
    H1.push_back(0.5 * hermitian(n, rng));
    H2.push_back(0.3 * hermitian(n, rng));
  }
  const Mat C = nparams >= 2 ? Mat(0.4 * hermitian(n, rng)) : Mat(Mat::Zero(n, n));
  HermitianFamily f;
  f.nparams = nparams;
  f.B = [=](const Params& u) {
    Mat b = H0;
    for (int i = 0; i < nparams; ++i) b += u[i] * H1[i] + std::sin(u[i]) * H2[i];
    if (nparams >= 2) b += u[0] * u[1] * C;
    return b;
  };
  f.dB = [=](const Params& u, int i) {
    Mat b = H1[i] + std::cos(u[i]) * H2[i];
    if (nparams >= 2 && i == 0) b += u[1] * C;
    if (nparams >= 2 && i == 1) b += u[0] * C;
    return b;
  };
  f.lower.assign(nparams, -1.0);
  f.upper.assign(nparams, 1.0);
  return f;
}

Mat Hodge::apply(const std::function<cplx(double)>& f) const {
  Eigen::VectorXcd fv(evals.size());
  for (int i = 0; i < evals.size(); ++i) fv(i) = f(evals(i));
  return V * fv.asDiagonal() * Vinv;
}

Mat Hodge::heat(double t) const {
  return apply([t](double l) { return cplx(std::exp(-t * l)); });
}

Mat Hodge::resolvent_power(cplx z, int N) const {
  if (N < 1) throw DomainError("resolvent power must be positive");
  for (int i = 0; i < evals.size(); ++i)
    if (std::abs(z - evals(i)) < 1e-8) throw ConditioningError("resolvent: z is within 1e-8 of the spectrum");
  return apply([z, N](double l) { return std::pow(z - l, -N); });
}

double Hodge::kernel_threshold() const {
  const double top = evals.size() ? evals.cwiseAbs().maxCoeff() : 0.0;
  return 1e-9 * std::max(1.0, top);
}

Mat Hodge::kernel_projection() const {
  const double thr = kernel_threshold();
  return apply([thr](double l) { return cplx(std::abs(l) < thr ? 1.0 : 0.0); });
}

std::vector<double> Hodge::degree_spectrum(int q) const {
  std::vector<double> out;
  for (int i = 0; i < evals.size(); ++i)
    if (evec_degree(i) == q) out.push_back(evals(i));
  std::sort(out.begin(), out.end());
  return out;
}

Hodge hodge(const GradedComplex& c, const Mat& h) {
  if (h.rows() != c.size() || h.cols() != c.size()) throw ValidationError("metric has the wrong shape");
  Hodge out;
  out.h = h;
  out.hinv = metric_inverse(h);
  out.d = c.d;
  out.dstar = out.hinv * c.d.adjoint() * h;
  out.lap = c.d * out.dstar + out.dstar * c.d;
  const int n = c.size();
  out.evals.resize(n);
  out.evec_degree.resize(n);
  out.V = Mat::Zero(n, n);
  out.Vinv = Mat::Zero(n, n);
  for (int q = 0; q <= c.top_degree(); ++q) {
    const auto idx = c.indices(q);
    if (idx.empty()) continue;
    const Mat hq = h(idx, idx);
    Eigen::LLT<Mat> llt(hq);
    if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
    const Mat L = llt.matrixL();
    const Mat Ladj = L.adjoint();
    // L^dagger Delta_q L^{-dagger} is Hermitian.
    Mat M = Ladj * Mat(out.lap(idx, idx));
    M = Ladj.transpose().triangularView<Eigen::Lower>().solve(M.transpose()).transpose();
    M = 0.5 * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    const Mat U = es.eigenvectors();
    const Mat Vq = Ladj.triangularView<Eigen::Upper>().solve(U);
    const Mat Vinvq = U.adjoint() * Ladj;
    out.V(idx, idx) = Vq;
    out.Vinv(idx, idx) = Vinvq;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.evals(idx[k]) = es.eigenvalues()(k);
      out.evec_degree(idx[k]) = q;
    }
  }
  return out;
}

Mat heat_operator(const GradedComplex& c, const Mat& h, double t) { return hodge(c, h).heat(t); }

Mat resolvent_power(const GradedComplex& c, const Mat& h, cplx z, int N) { return hodge(c, h).resolvent_power(z, N); }

Mat degree_block(const GradedComplex& c, const Mat& op, int q) {
  const auto idx = c.indices(q);
  return op(idx, idx);
}

Eigen::VectorXcd grading_diagonal(const GradedComplex& c, const std::function<double(int)>& w) {
  Eigen::VectorXcd out(c.size());
  for (int i = 0; i < c.size(); ++i) out(i) = w(c.degree[i]);
  return out;
}

IndexReport index_mckean_singer(const GradedComplex& c, const Mat& h, const std::vector<double>& t_grid) {
  const Hodge hd = hodge(c, h);
  IndexReport rep;
  const double thr = hd.kernel_threshold();
  for (int i = 0; i < hd.evals.size(); ++i)
    if (std::abs(hd.evals(i)) < thr) rep.index += hd.evec_degree(i) % 2 ? -1 : 1;
  const auto dims = c.dims();
  std::vector<int> rank(dims.size() + 1, 0);
  for (int q = 0; q + 1 < static_cast<int>(dims.size()); ++q) {
    Eigen::JacobiSVD<Mat> svd(c.block(q));
    svd.setThreshold(1e-10);
    rank[q + 1] = static_cast<int>(svd.rank());  // rank[q + 1] = rank d_q
  }
  for (int q = 0; q < static_cast<int>(dims.size()); ++q)
    rep.rank_nullity_index += (q % 2 ? -1 : 1) * (dims[q] - rank[q + 1] - rank[q]);
  const auto P = parity(c);
  for (double t : t_grid) {
    const double s = weighted_trace(P, hd.heat(t)).real();
    rep.supertraces.push_back(s);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(s - rep.index));
  }
  rep.constant = rep.max_deviation <= 1e-10;
  return rep;
}

cplx omega_I(const GradedComplex& c, const Mat& h) { return weighted_trace(parity(c), hodge(c, h).heat(1.0)); }

cplx omega_T(const GradedComplex& c, const MetricFamily& f, const Params& u, int dir) {
  const Hodge hd = hodge(c, f.h(u));
  const Mat I = Mat::Identity(c.size(), c.size());
  return weighted_trace(parity(c), hd.heat(1.0) * f.b(u, dir) * (I - hd.kernel_projection()));
}

cplx omega_eta(const HermitianFamily& f, const Params& u, int dir) {
  Eigen::SelfAdjointEigenSolver<Mat> es(f.B(u));
  const Eigen::VectorXd g = (-es.eigenvalues().array().square()).exp();
  const Mat heat = es.eigenvectors() * g.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return (f.dB(u, dir) * heat).trace();
}

namespace {

struct MTData {
  Hodge hd;
  Eigen::VectorXcd P;
  Mat b1x, b1y, b2x, b2y;
};

MTData mt_data(const GradedComplex& c, const MetricFamily& f, const Params& u, int x, int y) {
  if (!c.is_product() || !f.is_product()) throw CapabilityError("omega~_MT needs a product complex and product family");
  const Mat zero = Mat::Zero(c.size(), c.size());
  auto b1 = [&](int i) { return i < f.split ? f.b(u, i) : zero; };
  auto b2 = [&](int i) { return i >= f.split ? f.b(u, i) : zero; };
  return {hodge(c, f.h(u)), parity(c), b1(x), b1(y), b2(x), b2(y)};
}

// sum over compositions (i1, i2) of N of Tr (-1)^Q R^{i1} (b1x R^{i2} b2y - b1y R^{i2} b2x).
cplx mt_sum(const MTData& m, cplx z, int N) {
  std::vector<Mat> R{Mat::Identity(m.hd.V.rows(), m.hd.V.cols())};
  const Mat R1 = m.hd.resolvent_power(z, 1);
  for (int i = 1; i < N; ++i) R.push_back(R.back() * R1);
  cplx s = 0.0;
  for (int i1 = 1; i1 < N; ++i1) {
    const int i2 = N - i1;
    s += weighted_trace(m.P, R[i1] * (m.b1x * R[i2] * m.b2y - m.b1y * R[i2] * m.b2x));
  }
  return s;
}

cplx mt_tilde(const MTData& m, cplx z, int N) {
  if (N < 2) throw DomainError("omega~_MT needs N >= 2");
  return (0.5 * (mt_sum(m, z, N) + std::conj(mt_sum(m, std::conj(z), N)))) / double(N - 1);
}

struct Contour {
  double center, radius;
  int nodes;
};

Contour contour_for(const Hodge& hd, int nodes) {
  const double top = hd.evals.size() ? hd.evals.maxCoeff() : 0.0;
  Contour c{0.5 * top, 0.5 * top + 1.0, nodes};
  c.nodes = std::max(nodes, static_cast<int>(std::ceil(40.0 * c.radius)));
  return c;
}

double factorial(int n) {
  double f = 1.0;
  for (int j = 2; j <= n; ++j) f *= j;
  return f;
}

// (-1)^{N-1} (N-1)! / (2 pi i) times the trapezoid rule for the contour integral of e^{-z} g(z).
template <class G>
auto contour_integral(const Contour& c, int N, G g) -> decltype(g(cplx{})) {
  decltype(g(cplx{})) sum = g(cplx(c.center + c.radius, 0.0)) * 0.0;
  for (int j = 0; j < c.nodes; ++j) {
    const cplx w = std::polar(1.0, 2.0 * kPi * (j + 0.5) / c.nodes);
    const cplx z = c.center + c.radius * w;
    sum += g(z) * (std::exp(-z) * c.radius * w / double(c.nodes));
  }
  sum *= (N % 2 ? 1.0 : -1.0) * factorial(N - 1);
  return sum;
}

}  // namespace

cplx omega_tilde_MT(const GradedComplex& c, const MetricFamily& f, const Params& u, int x, int y, cplx z, int N) {
  return mt_tilde(mt_data(c, f, u, x, y), z, N);
}

FormFn as_form(const GradedComplex& c, const MetricFamily& f) {
  return {1, [c, f](const Params& u, const std::vector<int>& dirs) { return omega_T(c, f, u, dirs[0]); }, f.lower,
          f.upper};
}

FormFn as_form(const HermitianFamily& f) {
  return {1, [f](const Params& u, const std::vector<int>& dirs) { return omega_eta(f, u, dirs[0]); }, f.lower, f.upper};
}

FormFn as_mt_form(const GradedComplex& c, const MetricFamily& f, cplx z, int N) {
  return {2,
          [c, f, z, N](const Params& u, const std::vector<int>& dirs) {
            return omega_tilde_MT(c, f, u, dirs[0], dirs[1], z, N);
          },
          f.lower, f.upper};
}

FormFn as_index_form(const GradedComplex& c, const MetricFamily& f) {
  return {0, [c, f](const Params& u, const std::vector<int>&) { return omega_I(c, f.h(u)); }, f.lower, f.upper};
}

cplx numerical_exterior_derivative(const FormFn& form, const Params& u, const std::vector<int>& dirs, double step) {
  if (static_cast<int>(dirs.size()) != form.degree + 1) throw DomainError("exterior derivative: need degree + 1 directions");
  if (!(step > 0)) throw DomainError("exterior derivative: step must be positive");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] - step < form.lower[i] || u[i] + step > form.upper[i])
      throw DomainError("exterior derivative: point too close to the domain boundary");
  cplx total = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    std::vector<int> rest;
    for (std::size_t j = 0; j < dirs.size(); ++j)
      if (j != i) rest.push_back(dirs[j]);
    Params up = u, dn = u;
    up[dirs[i]] += step;
    dn[dirs[i]] -= step;
    const cplx deriv = (form.eval(up, rest) - form.eval(dn, rest)) / (2.0 * step);
    total += (i % 2 ? -1.0 : 1.0) * deriv;
  }
  return total;
}

DerivativeEstimate exterior_derivative_with_order(const FormFn& form, const Params& u, const std::vector<int>& dirs,
                                                  double step) {
  DerivativeEstimate out;
  for (int k = 0; k < 3; ++k) out.at_steps[k] = numerical_exterior_derivative(form, u, dirs, step * double(4 >> k));
  out.value = out.at_steps[2];
  const double a = std::abs(out.at_steps[0] - out.at_steps[1]), b = std::abs(out.at_steps[1] - out.at_steps[2]);
  out.order = (a > 0 && b > 0) ? std::log2(a / b) : 0.0;
  return out;
}

double log_torsion(const GradedComplex& c, const Mat& h) {
  const Hodge hd = hodge(c, h);
  const double thr = hd.kernel_threshold();
  double s = 0.0;
  for (int q = 0; q <= c.top_degree(); ++q)
    for (double l : hd.degree_spectrum(q))
      if (std::abs(l) >= thr) s += sign_of(q) * q * std::log(l);
  return -0.5 * s;
}

double torsion_variation_trace(const GradedComplex& c, const MetricFamily& f, const Params& u) {
  const Hodge hd = hodge(c, f.h(u));
  const Mat I = Mat::Identity(c.size(), c.size());
  return -0.5 * weighted_trace(parity(c), f.b(u, 0) * (I - hd.kernel_projection())).real();
}

VariationReport torsion_variation_check(const GradedComplex& c, const MetricFamily& f, const std::vector<double>& grid,
                                        double step) {
  if (f.nparams != 1) throw DomainError("torsion_variation_check: a one-parameter path is required");
  VariationReport rep;
  rep.acyclic = true;
  for (double u : grid) {
    f.check_interior({u}, step);
    const Hodge hd = hodge(c, f.h({u}));
    for (int i = 0; i < hd.evals.size(); ++i)
      if (std::abs(hd.evals(i)) < hd.kernel_threshold()) rep.acyclic = false;
    VariationPoint p;
    p.u = u;
    p.finite_difference = (log_torsion(c, f.h({u + step})) - log_torsion(c, f.h({u - step}))) / (2.0 * step);
    p.trace_formula = torsion_variation_trace(c, f, {u});
    p.discrepancy = std::abs(p.finite_difference - p.trace_formula);
    rep.max_discrepancy = std::max(rep.max_discrepancy, p.discrepancy);
    rep.points.push_back(p);
  }
  return rep;
}

double b_symmetry_defect(const MetricFamily& f, const Params& u) {
  const Mat h = f.h(u);
  const Mat hinv = metric_inverse(h);
  double worst = 0.0;
  for (int i = 0; i < f.nparams; ++i) {
    const Mat b = f.b(u, i);
    worst = std::max(worst, (b - hinv * b.adjoint() * h).norm() / std::max(1.0, b.norm()));
  }
  return worst;
}

double dstar_variation_defect(const GradedComplex& c, const MetricFamily& f, const Params& u, int dir, double step) {
  f.check_interior(u, step);
  auto dstar = [&](const Params& v) {
    const Mat h = f.h(v);
    return Mat(metric_inverse(h) * c.d.adjoint() * h);
  };
  Params up = u, dn = u;
  up[dir] += step;
  dn[dir] -= step;
  const Mat fd = (dstar(up) - dstar(dn)) / (2.0 * step);
  const Mat ds = dstar(u), b = f.b(u, dir);
  return (fd - (ds * b - b * ds)).norm();
}

double scaling_curve_defect(const GradedComplex& c, const Mat& h0, double t) {
  const MetricFamily f = MetricFamily::scaling(c, h0);
  const Mat Q = grading_diagonal(c, [](int q) { return double(q); }).asDiagonal();
  const double db = (t * f.b({t}, 0) - Q).norm();
  const double dl = (hodge(c, f.h({t})).lap - t * hodge(c, h0).lap).norm();
  return std::max(db, dl);
}

Mat contour_heat(const Hodge& hd, int N, int nodes) {
  const Contour ct = contour_for(hd, nodes);
  const Eigen::VectorXcd diag = contour_integral(ct, N, [&](cplx z) {
    Eigen::VectorXcd v(hd.evals.size());
    for (int i = 0; i < hd.evals.size(); ++i) v(i) = std::pow(z - hd.evals(i), -N);
    return v;
  });
  return hd.V * diag.asDiagonal() * hd.Vinv;
}

MTPullbackReport mt_pullback_check(const GradedComplex& c1, const Mat& h1, const GradedComplex& c2, const Mat& h2,
                                   double t1, double t2, cplx z, int N, int nodes) {
  const GradedComplex c = GradedComplex::tensor(c1, c2);
  const double s1 = 0.5 * c.n1, s2 = 0.5 * c.n2;
  const MetricFamily f =
      MetricFamily::product(MetricFamily::scaling(c1, h1, s1), MetricFamily::scaling(c2, h2, s2));
  const Params u{t1, t2};
  const MTData m = mt_data(c, f, u, 0, 1);
  Eigen::VectorXcd W(c.size()), W12(c.size());
  for (int i = 0; i < c.size(); ++i) {
    W(i) = sign_of(c.degree[i]) * (c.degree1[i] - s1) * (c.degree2[i] - s2);
    W12(i) = sign_of(c.degree[i]) * double(c.degree1[i]) * double(c.degree2[i]);
  }
  MTPullbackReport rep;
  rep.resolvent_form = t1 * t2 * mt_tilde(m, z, N);
  rep.resolvent_trace = weighted_trace(W, m.hd.resolvent_power(z, N));
  const Contour ct = contour_for(m.hd, nodes);
  rep.contour_form = t1 * t2 * contour_integral(ct, N, [&](cplx w) { return mt_tilde(m, w, N); });
  const Mat heat = m.hd.heat(1.0);
  rep.heat_full = weighted_trace(W, heat);
  rep.heat_q1q2 = weighted_trace(W12, heat);
  rep.resolvent_defect = std::abs(rep.resolvent_form - rep.resolvent_trace);
  rep.contour_defect = std::abs(rep.contour_form - rep.heat_full);
  rep.cross_term_defect = std::abs(rep.heat_full - rep.heat_q1q2);
  return rep;
}

namespace {

void subsets(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, k, i + 1, cur, out);
    cur.pop_back();
  }
}

double max_diff(const MatrixForm& a, const MatrixForm& b) {
  double worst = 0.0;
  for (const auto& [k, m] : a.comps) {
    auto it = b.comps.find(k);
    const double diff = it == b.comps.end() ? m.norm() : (m - it->second).norm();
    worst = std::max(worst, diff / std::max(1.0, m.norm()));
  }
  for (const auto& [k, m] : b.comps)
    if (!a.comps.count(k)) worst = std::max(worst, m.norm() / std::max(1.0, m.norm()));
  return worst;
}

MatrixForm scaled(const MatrixForm& a, double s) {
  MatrixForm out = a;
  for (auto& [k, m] : out.comps) m *= s;
  return out;
}

}  // namespace

MatrixForm MatrixForm::random(int degree, int nparams, int n, std::uint64_t seed) {
  Rng rng(seed);
  MatrixForm f;
  f.degree = degree;
  std::vector<int> cur;
  std::vector<std::vector<int>> keys;
  subsets(nparams, degree, 0, cur, keys);
  for (const auto& k : keys) f.comps[k] = gaussian(n, n, rng);
  return f;
}

MatrixForm MatrixForm::wedge(const MatrixForm& other) const {
  MatrixForm out;
  out.degree = degree + other.degree;
  for (const auto& [I, A] : comps)
    for (const auto& [J, B] : other.comps) {
      std::vector<int> K = I;
      K.insert(K.end(), J.begin(), J.end());
      int inversions = 0;
      bool repeated = false;
      for (std::size_t a = 0; a < K.size(); ++a)
        for (std::size_t b = a + 1; b < K.size(); ++b) {
          if (K[a] == K[b]) repeated = true;
          if (K[a] > K[b]) ++inversions;
        }
      if (repeated) continue;
      std::sort(K.begin(), K.end());
      const Mat prod = (inversions % 2 ? -1.0 : 1.0) * (A * B);
      auto it = out.comps.find(K);
      if (it == out.comps.end())
        out.comps[K] = prod;
      else
        it->second += prod;
    }
  return out;
}

MatrixForm MatrixForm::adjoint(const Mat& h) const {
  const Mat hinv = metric_inverse(h);
  MatrixForm out;
  out.degree = degree;
  for (const auto& [k, m] : comps) out.comps[k] = hinv * m.adjoint() * h;
  return out;
}

std::map<std::vector<int>, cplx> MatrixForm::trace() const {
  std::map<std::vector<int>, cplx> out;
  for (const auto& [k, m] : comps) out[k] = m.trace();
  return out;
}

AdjointReport adjoint_trace_identities_check(std::uint64_t seed, int n, int nparams) {
  Rng rng(seed);
  const Mat A = gaussian(n, n, rng);
  const Mat h = A * A.adjoint() + Mat::Identity(n, n);
  std::vector<MatrixForm> forms;
  for (int deg : {0, 1, 1, 2}) forms.push_back(MatrixForm::random(deg, nparams, n, rng()));
  AdjointReport rep;
  auto trace_gap = [](const std::map<std::vector<int>, cplx>& a, const std::map<std::vector<int>, cplx>& b, double s,
                      bool conj) {
    double worst = 0.0;
    for (const auto& [k, v] : a) {
      auto it = b.find(k);
      const cplx w = it == b.end() ? cplx{} : (conj ? std::conj(it->second) : it->second);
      worst = std::max(worst, std::abs(v - s * w) / std::max(1.0, std::abs(v)));
    }
    return worst;
  };
  for (const auto& k : forms) {
    rep.trace_conjugate = std::max(rep.trace_conjugate, trace_gap(k.trace(), k.adjoint(h).trace(), 1.0, true));
    for (const auto& l : forms) {
      const double s = (k.degree * l.degree) % 2 ? -1.0 : 1.0;
      const MatrixForm kl = k.wedge(l);
      if (kl.comps.empty()) continue;
      rep.trace_swap = std::max(rep.trace_swap, trace_gap(kl.trace(), l.wedge(k).trace(), s, false));
      rep.product_adjoint =
          std::max(rep.product_adjoint, max_diff(kl.adjoint(h), scaled(l.adjoint(h).wedge(k.adjoint(h)), s)));
    }
  }
  // b = h^{-1} dh is h-symmetric, so its trace is real.
  for (int i = 0; i < nparams; ++i) {
    const Mat dh = hermitian(n, rng);
    rep.symmetric_real = std::max(rep.symmetric_real, std::abs((metric_inverse(h) * dh).trace().imag()));
  }
  const MatrixForm k1 = MatrixForm::random(1, nparams, n, rng()), k2 = MatrixForm::random(1, nparams, n, rng()),
                   k3 = MatrixForm::random(1, nparams, n, rng());
  rep.eps3 = ((3 * 2) / 2) % 2 ? -1 : 1;
  rep.reversal = max_diff(k1.wedge(k2).wedge(k3).adjoint(h),
                          scaled(k3.adjoint(h).wedge(k2.adjoint(h)).wedge(k1.adjoint(h)), rep.eps3));
  const double tol = 1e-10;
  rep.ok = rep.trace_swap < tol && rep.trace_conjugate < tol && rep.product_adjoint < tol &&
           rep.symmetric_real < tol && rep.reversal < tol && rep.eps3 == -1;
  return rep;
}

}  // namespace torsionkit
