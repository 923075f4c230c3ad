#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "torsionkit/geometry.hpp"
#include "torsionkit/matrix_model.hpp"
#include "torsionkit/mellin.hpp"
#include "torsionkit/run.hpp"

namespace py = pybind11;
using namespace torsionkit;

namespace {

GradedSpectrum graded(const std::string& kind, double radius, double alpha, double beta) {
  if (kind == "circle") return GradedSpectrum::circle_complex(radius, alpha);
  if (kind == "torus") return GradedSpectrum::torus_complex(radius, alpha, beta);
  throw DomainError("kind must be circle or torus");
}

Spectrum scalar(const std::string& kind, double radius, double alpha, double beta) {
  if (kind == "circle") return Spectrum::circle(radius, alpha);
  if (kind == "torus") return Spectrum::torus(radius, alpha, beta);
  throw DomainError("kind must be circle or torus");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral zeta functions, analytic torsion and multi-torsion";
  m.attr("__version__") = kVersion;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);
  py::register_exception<AccuracyError>(m, "AccuracyError", PyExc_RuntimeError);
  py::register_exception<ConditioningError>(m, "ConditioningError", PyExc_RuntimeError);

  m.def(
      "heat_trace",
      [](double radius, double alpha, double t, double tol, const std::string& kind, double beta) {
        return eval_trace(scalar(kind, radius, alpha, beta), t, tol).value;
      },
      py::arg("radius"), py::arg("alpha"), py::arg("t"), py::arg("tol") = 1e-12, py::arg("kind") = "circle",
      py::arg("beta") = 0.0, "Tr' exp(-t Delta) on functions");

  m.def(
      "log_det",
      [](double radius, double alpha, double tol, const std::string& kind, double beta) {
        const LogDetResult r = log_det(scalar(kind, radius, alpha, beta), tol);
        return py::make_tuple(r.value, r.error);
      },
      py::arg("radius"), py::arg("alpha"), py::arg("tol") = 1e-10, py::arg("kind") = "circle", py::arg("beta") = 0.0,
      "(log det' Delta, error) on functions");

  m.def(
      "log_det_finite",
      [](const std::vector<std::pair<double, long>>& eigenvalues, long kernel, double tol) {
        std::vector<Eigenvalue> e;
        for (const auto& [l, mult] : eigenvalues) e.push_back({l, mult});
        return log_det(Spectrum::finite(std::move(e), kernel), tol).value;
      },
      py::arg("eigenvalues"), py::arg("kernel") = 0, py::arg("tol") = 1e-10);

  m.def(
      "log_torsion",
      [](double radius, double alpha, double tol, const std::string& kind, double beta) {
        const TorsionResult r = log_torsion(graded(kind, radius, alpha, beta), tol);
        return py::dict(py::arg("value") = r.value, py::arg("via_determinants") = r.via_determinants,
                        py::arg("error") = r.error, py::arg("routes_agree") = r.routes_agree);
      },
      py::arg("radius"), py::arg("alpha"), py::arg("tol") = 1e-10, py::arg("kind") = "circle", py::arg("beta") = 0.0);

  m.def(
      "eta_invariant",
      [](double radius, double a, double tol) {
        const auto r = eta_invariant(GradedSpectrum::dirac_circle(radius, a), tol);
        return py::make_tuple(r.value, r.error);
      },
      py::arg("radius"), py::arg("a"), py::arg("tol") = 1e-10, "eta of (-i d/dtheta + a) / r");

  m.def(
      "multi_torsion",
      [](const std::string& geometry_json, double tol) {
        const QuotientGeometry g = parse_geometry(json::parse(geometry_json));
        require_valid_geometry(g);
        const MultiTorsionResult r = quotient_multi_torsion(g, tol);
        return py::dict(py::arg("value") = r.value, py::arg("error") = r.error, py::arg("paths_agree") = r.paths_agree);
      },
      py::arg("geometry_json"), py::arg("tol") = 1e-7, "Multi-torsion of a geometry record (JSON text)");

  m.def(
      "validate_geometry",
      [](const std::string& geometry_json) {
        const ValidationReport r = validate_geometry(parse_geometry(json::parse(geometry_json)));
        py::dict out;
        for (const auto& c : r.checks) out[py::str(c.name)] = c.passed;
        return out;
      },
      py::arg("geometry_json"));

  m.def(
      "fit_expansion",
      [](const std::vector<std::pair<double, double>>& samples, const std::vector<double>& powers) {
        const FitResult f = fit_expansion(samples, powers);
        py::dict coeffs;
        for (const auto& t : f.expansion.terms) coeffs[py::float_(t.power)] = t.coeff.real();
        return py::dict(py::arg("coefficients") = coeffs, py::arg("residual_rms") = f.residual_rms,
                        py::arg("residual_max") = f.residual_max, py::arg("diagnostic") = f.diagnostic);
      },
      py::arg("samples"), py::arg("powers"));

  m.def(
      "mckean_singer_index",
      [](const std::vector<int>& dims, const std::vector<int>& ranks, std::uint64_t seed, const std::vector<double>& ts) {
        const GradedComplex c = GradedComplex::random(dims, ranks, seed);
        const IndexReport r = index_mckean_singer(c, MetricFamily::random(c, 1, seed + 1).h({0.0}), ts);
        return py::dict(py::arg("index") = r.index, py::arg("rank_nullity_index") = r.rank_nullity_index,
                        py::arg("supertraces") = r.supertraces);
      },
      py::arg("dims"), py::arg("ranks"), py::arg("seed") = 1, py::arg("t_grid") = std::vector<double>{0.1, 1.0, 10.0});

  m.def(
      "execute",
      [](const std::string& config_json) {
        return execute(RunConfig::parse(config_json)).to_json().dump();
      },
      py::arg("config_json"), "Evaluate a run config (JSON text) and return the manifest as JSON text");
}
