#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "incidentlab/experiment.hpp"

namespace py = pybind11;
using namespace incidentlab;

namespace {

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["tp"] = r.counts.tp;
  d["fp"] = r.counts.fp;
  d["tn"] = r.counts.tn;
  d["fn"] = r.counts.fn;
  d["dr"] = r.dr;
  d["far"] = r.far;
  d["accuracy"] = r.accuracy;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["specificity"] = r.specificity;
  d["auc_roc"] = r.auc_roc;
  d["event_detection_fraction"] = r.event_detection_fraction;
  d["mttd_s"] = r.mttd_s;
  d["detected_incidents"] = r.detected_incidents;
  d["total_incidents"] = r.total_incidents;
  d["localization_accuracy"] = r.localization_accuracy;
  d["severity_accuracy"] = r.severity_accuracy;
  d["gating_violations"] = r.gating_violations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "incidentlab core bindings";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<RoadNetwork>(m, "RoadNetwork")
      .def_property_readonly("node_ids",
                             [](const RoadNetwork& n) {
                               std::vector<std::string> ids;
                               for (const auto& x : n.nodes()) ids.push_back(x.id);
                               return ids;
                             })
      .def_property_readonly("segment_ids",
                             [](const RoadNetwork& n) {
                               std::vector<std::string> ids;
                               for (const auto& s : n.segments()) ids.push_back(s.id);
                               return ids;
                             })
      .def_property_readonly("road_labels", &RoadNetwork::road_labels)
      .def("shortest_route",
           [](const RoadNetwork& n, const std::string& a, const std::string& b) {
             return route_ids(n, shortest_route(n, a, b));
           })
      .def("serialize", [](const RoadNetwork& n) { return serialize_network(n); });
  m.def("load_network", &load_network, py::arg("path"));
  m.def("parse_network", &parse_network, py::arg("text"));
  m.def("contiguous_sensor_pairs",
        [](const RoadNetwork& n, const std::vector<std::string>& sensors, double range) {
          return contiguous_sensor_pairs(n, SensorPlacement{sensors, range});
        },
        py::arg("network"), py::arg("sensors"), py::arg("range_m") = 50.0);

  py::class_<FlowModelParams>(m, "FlowModelParams")
      .def(py::init<>())
      .def_readwrite("a1", &FlowModelParams::a1)
      .def_readwrite("b1", &FlowModelParams::b1)
      .def_readwrite("c1", &FlowModelParams::c1)
      .def_readwrite("a2", &FlowModelParams::a2)
      .def_readwrite("b2", &FlowModelParams::b2)
      .def_readwrite("c2", &FlowModelParams::c2)
      .def_readwrite("d", &FlowModelParams::d)
      .def_readwrite("alpha_sigma", &FlowModelParams::alpha_sigma)
      .def_readwrite("fit_rmse", &FlowModelParams::fit_rmse)
      .def_readwrite("bin_s", &FlowModelParams::bin_s)
      .def("__call__", [](const FlowModelParams& p, double t) { return eval_flow(p, t); });

  m.def("fit_counts",
        [](const std::vector<double>& counts, double bin_s) {
          MacroCountSeries s;
          s.bin_s = bin_s;
          s.counts = counts;
          return lm_fit(s, fft_init_params(s));
        },
        py::arg("counts"), py::arg("bin_s") = 900.0, "FFT-initialised LM fit of the two-sinusoid flow model");
  m.def("fit_demand", [](const std::string& path) { return fit_demand(path).fitted; }, py::arg("counts_path"));

  py::class_<KsResult>(m, "KsResult")
      .def_readonly("statistic", &KsResult::statistic)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("passed", &KsResult::pass)
      .def_readonly("permutation", &KsResult::permutation);
  m.def("ks_two_sample", &ks_two_sample, py::arg("a"), py::arg("b"), py::arg("seed") = 0,
        py::arg("permutations") = 10000);

  py::enum_<Objective>(m, "Objective")
      .value("BINARY_LOGISTIC", Objective::BinaryLogistic)
      .value("SOFTMAX", Objective::Softmax);
  py::class_<TreeEnsembleConfig>(m, "TreeEnsembleConfig")
      .def(py::init<>())
      .def_readwrite("n_trees", &TreeEnsembleConfig::n_trees)
      .def_readwrite("max_depth", &TreeEnsembleConfig::max_depth)
      .def_readwrite("learning_rate", &TreeEnsembleConfig::learning_rate)
      .def_readwrite("min_samples_leaf", &TreeEnsembleConfig::min_samples_leaf)
      .def_readwrite("subsample", &TreeEnsembleConfig::subsample)
      .def_readwrite("objective", &TreeEnsembleConfig::objective)
      .def_readwrite("seed", &TreeEnsembleConfig::seed)
      .def_readwrite("l2", &TreeEnsembleConfig::l2)
      .def_readwrite("balance_classes", &TreeEnsembleConfig::balance_classes);
  py::class_<TreeEnsemble>(m, "TreeEnsemble")
      .def_readonly("classes", &TreeEnsemble::classes)
      .def_readonly("feature_names", &TreeEnsemble::feature_names)
      .def_readonly("train_loss", &TreeEnsemble::train_loss)
      .def_property_readonly("n_trees", [](const TreeEnsemble& t) { return t.trees.size(); })
      .def("predict_proba", &predict_proba, py::arg("row"))
      .def("predict_class", &predict_class, py::arg("row"))
      .def("to_json", &serialize_tree_ensemble);
  m.def("train_tree_ensemble", &train_tree_ensemble, py::arg("X"), py::arg("y"), py::arg("classes"),
        py::arg("feature_names"), py::arg("config") = TreeEnsembleConfig{});
  m.def("parse_tree_ensemble", &parse_tree_ensemble, py::arg("text"));

  m.def("auc_roc", &auc_roc, py::arg("scores"), py::arg("labels"));
  m.def("confusion",
        [](const std::vector<bool>& p, const std::vector<bool>& a) {
          const auto c = confusion(p, a);
          py::dict d;
          d["tp"] = c.tp;
          d["fp"] = c.fp;
          d["tn"] = c.tn;
          d["fn"] = c.fn;
          return d;
        },
        py::arg("predicted"), py::arg("actual"));

  m.def("load_feature_table",
        [](const std::string& path) {
          const auto t = load_feature_table(path);
          std::vector<std::int64_t> ends;
          std::vector<std::vector<double>> X;
          std::vector<bool> y;
          for (const auto& r : t.rows) {
            ends.push_back(r.window_end_s);
            X.push_back(r.features);
            y.push_back(r.label_incident);
          }
          py::dict d;
          d["feature_names"] = t.feature_names;
          d["window_end_s"] = ends;
          d["X"] = X;
          d["label"] = y;
          return d;
        },
        py::arg("path"));

  m.def("run_pipeline",
        [](const std::string& config_path, const std::string& out_dir) {
          const auto cfg = load_experiment_config(config_path);
          EvalReport report;
          {
            py::gil_scoped_release release;
            report = run_pipeline(cfg, out_dir).report;
          }
          return report_dict(report);
        },
        py::arg("config"), py::arg("out_dir") = "",
        "Simulate, extract features, train and evaluate; returns the evaluation report");
}
