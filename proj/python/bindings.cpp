#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "bstab/errors.hpp"
#include "bstab/scenario.hpp"

namespace py = pybind11;
using namespace bstab;

namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Stage parse_stage(const std::string& s) {
  if (s == "check") return Stage::Check;
  if (s == "schedule") return Stage::Schedule;
  if (s == "simulate") return Stage::Simulate;
  if (s == "asymptotic") return Stage::Asymptotic;
  throw ConfigError("unknown stage '" + s + "' (check, schedule, simulate, asymptotic)");
}

const System& system_of(const Scenario& s) {
  if (!s.system) throw ConfigError("scenario has no system");
  return *s.system;
}

py::dict label_info(const std::string& text) {
  const ControlLabel l = parse_control_label(text);
  py::list values;
  for (const auto& a : l.control_value_set()) values.append(py::make_tuple(a.field + 1, a.sign));
  py::dict d;
  d["label"] = l.to_string();
  d["degree"] = l.degree();
  d["switch_number"] = l.switch_number();
  d["sign"] = l.sign;
  d["control_values"] = values;
  return d;
}

}  // namespace

PYBIND11_MODULE(_bstab, m) {
  m.doc() = "Bracket-based feedback stabilization core";

  auto base = py::register_exception<Error>(m, "BstabError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<NonIntegrableError>(m, "NonIntegrableError", base.ptr());

  m.def("beta", &beta, py::arg("k"), "Maximal switch number over brackets of degree k.");
  m.def(
      "enumerate_labels",
      [](int m_fields, int h, bool prune) {
        std::vector<std::string> out;
        for (const auto& l : enumerate_labels(m_fields, h, prune)) out.push_back(l.to_string());
        return out;
      },
      py::arg("m"), py::arg("h"), py::arg("prune") = true);
  m.def("label_info", &label_info, py::arg("label"));
  m.def(
      "oriented_control_json",
      [](const std::string& label, double t) { return oriented_control(parse_control_label(label), t).to_json().dump(); },
      py::arg("label"), py::arg("t"));
  m.def(
      "solve_delta_check",
      [](const std::string& constants_json, double nu, int ell, double gamma_u, double u_r) {
        const DeltaCheck d =
            solve_delta_check(ConstantsEstimate::from_json(nlohmann::json::parse(constants_json)), nu, ell, gamma_u, u_r);
        return py::make_tuple(d.delta, d.residual);
      },
      py::arg("constants_json"), py::arg("nu"), py::arg("ell"), py::arg("gamma_u"), py::arg("u_r"));
  m.def("time_bound", &time_bound, py::arg("k"), py::arg("U_R"), py::arg("u_r"), py::arg("gamma_u"), py::arg("J"));

  py::class_<Scenario>(m, "Scenario")
      .def_static(
          "from_json", [](const std::string& text) { return load_scenario(nlohmann::json::parse(text, nullptr, true, true)); },
          py::arg("text"))
      .def_static(
          "from_file", [](const std::string& path) { return load_scenario_file(path); }, py::arg("path"))
      .def_property_readonly("name", [](const Scenario& s) { return s.name; })
      .def_property_readonly("k", [](const Scenario& s) { return s.k; })
      .def_property_readonly("dimension", [](const Scenario& s) { return system_of(s).n(); })
      .def_property_readonly("num_fields", [](const Scenario& s) { return system_of(s).m(); })
      .def(
          "set_jobs",
          [](Scenario& s, int jobs) {
            s.jobs = jobs;
            s.constants.jobs = jobs;
          },
          py::arg("jobs"))
      .def(
          "run_json",
          [](const Scenario& s, const std::string& stage, const std::string& out_dir) {
            const Stage st = parse_stage(stage);
            ScenarioResult r;
            {
              py::gil_scoped_release release;
              r = run_scenario(s, st);
              if (!out_dir.empty()) write_artifacts(s, r, st, out_dir);
            }
            return r.summary_json(s).dump();
          },
          py::arg("stage"), py::arg("out_dir") = "")
      .def(
          "hamiltonian",
          [](const Scenario& s, const std::vector<double>& x, const std::vector<double>& p, double u, int h) {
            const HamiltonianValue v =
                degree_h_hamiltonian(system_of(s), s.candidate.p0, to_vector(x), to_vector(p), u, h);
            return py::make_tuple(v.value, v.argmin_label.to_string());
          },
          py::arg("x"), py::arg("p"), py::arg("u"), py::arg("h"))
      .def(
          "asymptotic_json",
          [](const Scenario& s, const std::string& label, const std::vector<double>& x,
             const std::vector<double>& horizons) {
            return verify_asymptotic(system_of(s), parse_control_label(label), to_vector(x), horizons).to_json().dump();
          },
          py::arg("label"), py::arg("x"), py::arg("horizons"));
}
