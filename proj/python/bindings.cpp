#include "sis/cli.hpp"
#include "sis/io.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

namespace {

py::dict solution_dict(const sis::InterconnectSolution& s) {
  py::dict d;
  d["n_wp"] = s.n_wp;
  d["n_wm"] = s.n_wm;
  d["v"] = s.v;
  d["w"] = s.w;
  return d;
}

sis::ChainModel model_from_json(const std::string& text) {
  return sis::io::parse_model(sis::io::parse_json_text(text, "<string>"));
}

sis::io::ScenarioConfig scenario_from_json(const std::string& text, const std::string& base_dir) {
  return sis::io::parse_scenario(sis::io::parse_json_text(text, "<string>"), base_dir);
}

py::dict trace_dict(const sis::Trace& t) {
  py::dict d;
  d["seed"] = t.seed;
  d["horizon"] = t.horizon;
  d["x"] = t.x;
  d["u"] = t.u;
  d["v"] = t.v;
  d["w"] = t.w;
  d["gamma"] = t.gamma;
  d["d"] = t.d;
  d["y"] = t.y;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sisfilter, m) {
  m.doc() = "Chain interconnection solver and missing-measurement filter";

  py::register_exception<sis::Error>(m, "SisError");

  py::class_<sis::SignalDims>(m, "SignalDims")
      .def(py::init<>())
      .def(py::init([](int n_x, int n_u, int n_y, int n_wp, int n_wm) {
             return sis::SignalDims{n_x, n_u, n_y, n_wp, n_wm};
           }),
           py::arg("n_x"), py::arg("n_u") = 0, py::arg("n_y") = 0, py::arg("n_wp") = 0, py::arg("n_wm") = 0)
      .def_readwrite("n_x", &sis::SignalDims::n_x)
      .def_readwrite("n_u", &sis::SignalDims::n_u)
      .def_readwrite("n_y", &sis::SignalDims::n_y)
      .def_readwrite("n_wp", &sis::SignalDims::n_wp)
      .def_readwrite("n_wm", &sis::SignalDims::n_wm);

  py::class_<sis::SubsystemBlock>(m, "SubsystemBlock")
      .def_static("zeros", &sis::SubsystemBlock::zeros)
      .def_readwrite("dims", &sis::SubsystemBlock::dims)
      .def_readwrite("A", &sis::SubsystemBlock::A)
      .def_readwrite("B", &sis::SubsystemBlock::B)
      .def_readwrite("C", &sis::SubsystemBlock::C)
      .def_readwrite("D", &sis::SubsystemBlock::D)
      .def_readwrite("G", &sis::SubsystemBlock::G)
      .def_readwrite("H", &sis::SubsystemBlock::H)
      .def_readwrite("J", &sis::SubsystemBlock::J)
      .def_readwrite("R", &sis::SubsystemBlock::R)
      .def_readwrite("M", &sis::SubsystemBlock::M);

  py::class_<sis::ChainModel>(m, "ChainModel")
      .def_static("from_json", &model_from_json, py::arg("text"))
      .def_static("uniform", &sis::ChainModel::uniform, py::arg("length"), py::arg("horizon"), py::arg("block"))
      .def("to_json", [](const sis::ChainModel& model) { return sis::io::model_to_json(model).dump(); })
      .def_property_readonly("length", &sis::ChainModel::length)
      .def_property_readonly("horizon", &sis::ChainModel::horizon)
      .def("dims", &sis::ChainModel::dims, py::arg("i"))
      .def("block_at", &sis::ChainModel::block_at, py::arg("t"), py::arg("i"));

  m.def(
      "validate_chain",
      [](const sis::ChainModel& model) {
        std::vector<std::string> messages;
        for (const auto& v : sis::validate_chain(model).violations) messages.push_back(v.message);
        return messages;
      },
      "Violation messages; empty when the chain is valid.");

  m.def("partition_g", [](const sis::Matrix& g, const sis::SignalDims& dims) {
    const auto p = sis::partition_g(g, dims);
    return py::make_tuple(p.g11, p.g12, p.g21, p.g22);
  });

  m.def(
      "phi_beta",
      [](const sis::SubsystemBlock& block, const sis::Vector& z_plus, const sis::Vector& z_minus) {
        const auto pb = sis::phi_beta(block, sis::KnownPart{z_plus, z_minus});
        return py::make_tuple(pb.phi, pb.beta);
      },
      py::arg("block"), py::arg("z_plus"), py::arg("z_minus"));

  m.def(
      "solve_interconnect",
      [](const sis::ChainModel& model, int t, const std::vector<sis::Vector>& x, const std::vector<sis::Vector>& u) {
        return solution_dict(sis::solve_interconnect(model, t, x, u));
      },
      py::arg("model"), py::arg("t"), py::arg("x"), py::arg("u"));

  m.def(
      "monolithic_solve",
      [](const sis::ChainModel& model, int t, const std::vector<sis::Vector>& x, const std::vector<sis::Vector>& u) {
        return solution_dict(sis::monolithic_solve(model, t, x, u));
      },
      py::arg("model"), py::arg("t"), py::arg("x"), py::arg("u"));

  m.def(
      "gains",
      [](const sis::SubsystemBlock& block, double p, const sis::Matrix& S, const sis::Matrix& T) {
        const auto g = sis::gains(block, p, S, T);
        return py::make_tuple(g.xi1, g.xi2);
      },
      py::arg("block"), py::arg("p"), py::arg("S"), py::arg("T"));

  m.def(
      "simulate",
      [](const std::string& scenario_json, const std::string& base_dir) {
        return trace_dict(sis::simulate(scenario_from_json(scenario_json, base_dir).scenario));
      },
      py::arg("scenario_json"), py::arg("base_dir") = ".");

  m.def(
      "run_scenario",
      [](const std::string& scenario_json, const std::string& base_dir) {
        const auto cfg = scenario_from_json(scenario_json, base_dir);
        const auto& sc = cfg.scenario;
        const auto trace = sis::simulate(sc);
        const auto run = sis::run_filter(sc.model, trace, sc.schedule, cfg.priors);
        const auto pred = sis::run_predictor(sc.model, trace, cfg.priors);
        py::dict d;
        d["trace"] = trace_dict(trace);
        d["estimates"] = run.estimates();
        d["filter_mse"] = sis::mse(trace, run.estimates()).aggregate;
        d["predictor_mse"] = sis::mse(trace, pred.estimates()).aggregate;
        return d;
      },
      py::arg("scenario_json"), py::arg("base_dir") = ".",
      "Simulates the scenario and runs the two-step filter and the predictor on it.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = sis::cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a sisfilter subcommand; returns (exit_code, stdout, stderr).");
}
