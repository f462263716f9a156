#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acgm/dagmath.hpp"
#include "acgm/envs.hpp"
#include "acgm/fixed_dag.hpp"
#include "acgm/graphgen.hpp"
#include "acgm/trainer.hpp"

namespace py = pybind11;
using namespace acgm;

namespace {

py::dict summary_to_dict(const EvalSummary& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["mean_return"] = s.mean_return;
  d["std_return"] = s.std_return;
  d["mean_reward_sum"] = s.mean_reward_sum;
  d["mean_edges"] = s.mean_edges;
  d["mean_nilpotent"] = s.mean_nilpotent;
  d["violation_rate"] = s.violation_rate;
  return d;
}

py::dict train_config_text(const std::string& text, bool write_files) {
  RunConfig cfg = parse_config_text(text);
  apply_env_overrides(cfg);
  TrainSession session(cfg);
  const TrainResult res = session.run(write_files);
  py::dict d;
  d["episodes_run"] = res.episodes_run;
  d["aborted_nan"] = res.aborted_nan;
  d["metrics_path"] = res.metrics_path;
  d["checkpoint_path"] = res.final_checkpoint_path;
  d["train_returns"] = res.train_returns;
  d["eval_returns"] = res.eval_returns;
  return d;
}

py::dict evaluate_checkpoint(const std::string& ckpt_path, long episodes,
                             const std::string& override_token, std::uint64_t seed) {
  LoadedModel model = load_model(ckpt_path);
  const std::uint64_t s = seed != 0 ? seed : model.cfg.run_seed + 0x5EEDu;
  auto env = make_env(model.cfg, s);
  GraphOverride ov;
  const GraphOverride* ov_ptr = nullptr;
  if (override_token != "none") {
    const auto fixed = parse_graph_override(override_token, env->num_agents());
    if (fixed) {
      ov = GraphOverride::fixed_graph(*fixed);
      ov_ptr = &ov;
    }
  }
  return summary_to_dict(evaluate_policy(*env, *model.generator, *model.policy,
                                         episodes, s, model.cfg.train_gamma,
                                         model.cfg.gen_depth_k, ov_ptr));
}

template <typename E>
py::class_<E> bind_env(py::module_& m, const char* name) {
  auto cls =
      py::class_<E>(m, name)
          .def("reset", &E::reset)
          .def(
              "step",
              [](E& env, const std::vector<int>& actions) {
                const StepResult r = env.step(actions);
                return py::make_tuple(r.obs, r.reward, r.done);
              },
              py::arg("actions"))
          .def_property_readonly("num_agents", &E::num_agents)
          .def_property_readonly("num_actions", &E::num_actions)
          .def_property_readonly("obs_dim", &E::obs_dim)
          .def_property_readonly("episode_len", &E::episode_len);
  return cls;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "coordination-graph generation and graph-ordered policies";

  // adjacency-matrix algebra
  m.def("matexp_trace", &dagmath::matexp_trace, py::arg("b"));
  m.def("matexp", &dagmath::matexp, py::arg("b"));
  m.def("acyclicity_value", &dagmath::acyclicity_value, py::arg("w"));
  m.def("acyclicity_grad", &dagmath::acyclicity_grad, py::arg("w"));
  m.def("depth_value", &dagmath::depth_value, py::arg("w"), py::arg("k"));
  m.def("depth_grad", &dagmath::depth_grad, py::arg("w"), py::arg("k"));
  m.def("is_acyclic", &dagmath::is_acyclic, py::arg("a"));
  m.def("find_cycle", &dagmath::find_cycle, py::arg("a"));
  m.def("topological_order", &dagmath::topological_order, py::arg("a"));
  m.def("nilpotent_index", &dagmath::nilpotent_index, py::arg("a"));
  m.def("longest_path_edges", &dagmath::longest_path_edges, py::arg("a"));
  m.def("parents_of", &dagmath::parents_of, py::arg("a"), py::arg("i"));
  m.def("edge_count", &dagmath::edge_count, py::arg("a"));
  m.def("repair_to_dag", &repair_to_dag, py::arg("sampled"), py::arg("weights"));
  m.def("fixed_baseline_dag", &fixed_baseline_dag);

  // environments
  m.def("cgs_reward", &cgs_reward, py::arg("f"));
  bind_env<CgsEnv>(m, "CgsEnv")
      .def(py::init<int, int, std::uint64_t, bool>(), py::arg("agents") = 10,
           py::arg("episode_len") = 10, py::arg("seed") = 1,
           py::arg("terminal_reward_only") = false);
  bind_env<NavEnv>(m, "NavEnv")
      .def(py::init<int, int, std::uint64_t>(), py::arg("agents") = 3,
           py::arg("episode_len") = 25, py::arg("seed") = 1);
  bind_env<CoordGameEnv>(m, "CoordGameEnv").def(py::init<std::uint64_t>(), py::arg("seed") = 1);

  // training and evaluation entry points
  m.def("train_config_text", &train_config_text, py::arg("config_text"),
        py::arg("write_files") = true);
  m.def("evaluate_checkpoint", &evaluate_checkpoint, py::arg("checkpoint"),
        py::arg("episodes") = 1000, py::arg("override") = "none", py::arg("seed") = 0);

  py::register_exception<CyclicGraphError>(m, "CyclicGraphError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<FormatError>(m, "FormatError");
}
