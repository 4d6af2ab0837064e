#include "lensopt/errors.hpp"
#include "lensopt/geometry_update.hpp"
#include "lensopt/lens_domain.hpp"
#include "lensopt/runner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace lensopt;

namespace {

RunOptions run_options(const std::string& out_dir, bool deterministic)
{
    RunOptions o;
    o.out_dir = out_dir;
    o.deterministic = deterministic;
    return o;
}

template <class F>
std::string run(const std::string& config_text, F&& cmd)
{
    const RunConfig cfg = parse_config_text(config_text);
    py::gil_scoped_release release;
    return manifest_json(cmd(cfg)).dump();
}

} // namespace

PYBIND11_MODULE(_lensopt, m)
{
    m.doc() = "Isogeometric Westervelt solver and acoustic lens shape optimizer";

    auto base = py::register_exception<Error>(m, "LensoptError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.def("version", &version_string);
    m.def("normalize_config", [](const std::string& text) { return to_json(parse_config_text(text)).dump(); },
          "Fills defaults and validates a JSON config; returns the full config as JSON text.");
    m.def("config_hash", [](const std::string& text) { return config_hash(parse_config_text(text)); });

    m.def("bspline_basis",
          [](const std::vector<double>& knots, int degree, double x) {
              return eval_bspline_basis(KnotVector(knots, degree), x);
          },
          py::arg("knots"), py::arg("degree"), py::arg("x"));
    m.def("reference_lens_dmin", &reference_lens_dmin, py::arg("x"));

    m.def("lens_domain_summary",
          [](const std::string& preset, int degree, const std::vector<int>& refinement) {
              if (refinement.size() != 6)
                  throw ConfigError("refinement needs six counts");
              const MultiPatchDomain d =
                  build_lens_domain(lens_preset(preset), degree,
                                    Refinement::layout(refinement[0], refinement[1], refinement[2], refinement[3],
                                                       refinement[4], refinement[5]));
              const LensShape s = design_dof_set(d, MovingSet::Both);
              py::dict out;
              out["n_patches"] = d.n_patches();
              out["n_global"] = d.n_global();
              out["n_design"] = s.size();
              out["n_movable"] = static_cast<int>(s.movable().size());
              std::vector<std::pair<double, double>> xy;
              for (const auto& dof : s.dofs)
                  xy.emplace_back(dof.x, dof.y);
              out["design_points"] = xy;
              return out;
          },
          py::arg("preset") = "upper_straight", py::arg("degree") = 2,
          py::arg("refinement") = std::vector<int>{36, 9, 73, 35, 36, 36});

    m.def("simulate",
          [](const std::string& text, const std::string& out, bool det) {
              return run(text, [&](const RunConfig& c) { return cmd_simulate(c, run_options(out, det)); });
          },
          py::arg("config_text"), py::arg("out_dir"), py::arg("deterministic") = false);
    m.def("optimize",
          [](const std::string& text, const std::string& out, bool det) {
              return run(text, [&](const RunConfig& c) { return cmd_optimize(c, run_options(out, det)); });
          },
          py::arg("config_text"), py::arg("out_dir"), py::arg("deterministic") = false);
    m.def("make_target",
          [](const std::string& text, const std::string& out) {
              return run(text, [&](const RunConfig& c) { return cmd_make_target(c, run_options(out, false)); });
          },
          py::arg("config_text"), py::arg("out_dir"));
    m.def("gradcheck",
          [](const std::string& text, const std::string& out, int n_dofs, std::vector<double> taus) {
              return run(text, [&](const RunConfig& c) {
                  return cmd_gradcheck(c, run_options(out, false), n_dofs, taus);
              });
          },
          py::arg("config_text"), py::arg("out_dir"), py::arg("n_dofs") = 3,
          py::arg("taus") = std::vector<double>{1e-5, 5e-6});
}
