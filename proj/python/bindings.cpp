#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rsb/bridge.hpp"
#include "rsb/config.hpp"
#include "rsb/errors.hpp"
#include "rsb/experiments.hpp"
#include "rsb/metrics.hpp"
#include "rsb/schedule.hpp"
#include "rsb/tasks.hpp"
#include "rsb/training.hpp"

namespace py = pybind11;
using namespace rsb;

namespace {

ExperimentConfig config_from(const std::string& text) {
  try {
    return parse_config(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
}

CommandOptions options(const std::string& out, std::optional<std::uint64_t> seed,
                       std::vector<int> steps, std::vector<std::string> checkpoints) {
  CommandOptions o;
  o.out_dir = out;
  o.seed = seed;
  o.steps = std::move(steps);
  for (auto& c : checkpoints) o.checkpoints.emplace_back(c);
  return o;
}

using Command = CommandResult (*)(const ExperimentConfig&, const CommandOptions&);

std::string run(Command cmd, const std::string& config_json, const std::string& out,
                std::optional<std::uint64_t> seed, std::vector<int> steps,
                std::vector<std::string> checkpoints) {
  const ExperimentConfig c = config_from(config_json);
  CommandResult r;
  {
    py::gil_scoped_release release;
    r = cmd(c, options(out, seed, std::move(steps), std::move(checkpoints)));
  }
  return r.csv;
}

}  // namespace

PYBIND11_MODULE(_rsb_core, m) {
  m.doc() = "Schrodinger bridge core (C++)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);

  py::class_<NoiseSchedule>(m, "NoiseSchedule")
      .def(py::init([](double c, double k, double t_eps) {
             NoiseSchedule s{c, k, t_eps};
             s.validate();
             return s;
           }),
           py::arg("c") = 0.40, py::arg("k") = 2.6, py::arg("t_eps") = 1e-4)
      .def_readonly("c", &NoiseSchedule::c)
      .def_readonly("k", &NoiseSchedule::k)
      .def_readonly("t_eps", &NoiseSchedule::t_eps);

  m.def("sigma2", &sigma2, py::arg("schedule"), py::arg("t"));
  m.def("coefficients", [](const NoiseSchedule& s, double t) {
    BridgeCoefficients c = coefficients(s, t);
    py::dict d;
    d["t"] = c.t;
    d["sigma2_t"] = c.sigma2_t;
    d["bar_sigma2_t"] = c.bar_sigma2_t;
    d["sigma2_1"] = c.sigma2_1;
    d["w_x0"] = c.w_x0;
    d["w_x1"] = c.w_x1;
    d["var_marginal"] = c.var_marginal;
    return d;
  }, py::arg("schedule"), py::arg("t"));

  m.def("perturbed_target", [](const Eigen::VectorXd& x, const Eigen::VectorXd& x_star, double t) {
    TrainingPair p{x, x, x_star};
    return perturbed_target(p, t);
  }, py::arg("x"), py::arg("x_star"), py::arg("t"));

  m.def("mixture_posterior_mean", [](double y, std::vector<double> centers, std::vector<double> weights,
                                     double s2, double noise_var) {
    MixtureTask t{std::move(centers), std::move(weights), s2, noise_var, 1};
    return posterior_mean(Task{t}, Eigen::VectorXd::Constant(1, y))(0);
  }, py::arg("y"), py::arg("centers") = std::vector<double>{-1.0, 1.0},
     py::arg("weights") = std::vector<double>{0.5, 0.5}, py::arg("s2") = 0.01,
     py::arg("noise_var") = 0.25);

  m.def("si_sdr", &si_sdr, py::arg("estimate"), py::arg("reference"),
        py::arg("ceiling_db") = kSiSdrCeilingDb);
  m.def("perception_distance", [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    PerceptionDistance p = perception_distance(a, b);
    return py::make_tuple(p.w2, p.energy_distance, p.regularized);
  }, py::arg("outputs"), py::arg("reference"),
     "Sample sets hold one sample per column. Returns (w2, energy_distance, regularized).");

  m.def("validate_config", [](const std::string& text) { return to_json(config_from(text)).dump(); },
        py::arg("config_json"), "Parses a config and returns it with defaults filled in.");

  m.def("train", [](const std::string& cfg, const std::string& out, std::optional<std::uint64_t> seed) {
    return run(cmd_train, cfg, out, seed, {}, {});
  }, py::arg("config_json"), py::arg("out"), py::arg("seed") = py::none());
  m.def("sweep_steps", [](const std::string& cfg, const std::string& out, std::vector<std::string> checkpoints,
                          std::vector<int> steps, std::optional<std::uint64_t> seed) {
    return run(cmd_sweep_steps, cfg, out, seed, std::move(steps), std::move(checkpoints));
  }, py::arg("config_json"), py::arg("out"), py::arg("checkpoints") = std::vector<std::string>{},
     py::arg("steps") = std::vector<int>{}, py::arg("seed") = py::none());
  m.def("exposure_bias", [](const std::string& cfg, const std::string& out, std::vector<std::string> checkpoints,
                            std::optional<std::uint64_t> seed) {
    return run(cmd_exposure_bias, cfg, out, seed, {}, std::move(checkpoints));
  }, py::arg("config_json"), py::arg("out"), py::arg("checkpoints") = std::vector<std::string>{},
     py::arg("seed") = py::none());
  m.def("strategies", [](const std::string& cfg, const std::string& out, std::optional<std::uint64_t> seed) {
    return run(cmd_strategies, cfg, out, seed, {}, {});
  }, py::arg("config_json"), py::arg("out"), py::arg("seed") = py::none());
  m.def("ablation", [](const std::string& cfg, const std::string& out, std::optional<std::uint64_t> seed) {
    return run(cmd_ablation, cfg, out, seed, {}, {});
  }, py::arg("config_json"), py::arg("out"), py::arg("seed") = py::none());
  m.def("dump", [](const std::string& cfg, const std::string& out, int count, std::optional<std::uint64_t> seed) {
    const ExperimentConfig c = config_from(cfg);
    CommandOptions o = options(out, seed, {}, {});
    o.count = count;
    return cmd_dump(c, o).csv;
  }, py::arg("config_json"), py::arg("out"), py::arg("count") = 1000, py::arg("seed") = py::none());
  m.def("checkpoint_hash", [](const std::string& path) { return checkpoint_hash(read_checkpoint(path)); },
        py::arg("path"));
}
