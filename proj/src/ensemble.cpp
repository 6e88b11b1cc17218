#include "incidentlab/ensemble.hpp"

#include <algorithm>
#include <set>

#include "gbdt_json.hpp"

namespace incidentlab {

namespace {

const char* const kFormatTag = "incidentlab.ensemble/1";

TreeEnsemble fit_or_constant(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                             const std::vector<std::string>& classes, const std::vector<std::string>& names,
                             const TreeEnsembleConfig& cfg) {
  std::set<int> present(y.begin(), y.end());
  if (present.size() < 2) return constant_ensemble(classes[static_cast<std::size_t>(*present.begin())], names, cfg);
  // drop classes absent from the rows so that every output is trainable
  std::vector<std::string> kept;
  std::vector<int> remap(classes.size(), -1);
  for (int c : present) {
    remap[static_cast<std::size_t>(c)] = static_cast<int>(kept.size());
    kept.push_back(classes[static_cast<std::size_t>(c)]);
  }
  std::vector<int> yy;
  yy.reserve(y.size());
  for (int c : y) yy.push_back(remap[static_cast<std::size_t>(c)]);
  return train_tree_ensemble(X, yy, kept, names, cfg);
}

}  // namespace

EnsembleModel train_incident_ensemble(const FeatureTable& table, const TreeEnsembleConfig& cfg, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("detection threshold must lie in (0, 1)");
  if (table.rows.empty()) throw PreconditionError("train_incident_ensemble: empty table");
  std::vector<std::vector<double>> X_all, X_pos;
  std::vector<int> y_det;
  std::vector<std::string> pos_roads;
  std::vector<int> y_sev;
  for (const auto& r : table.rows) {
    X_all.push_back(r.features);
    y_det.push_back(r.label_incident ? 1 : 0);
    if (r.label_incident) {
      X_pos.push_back(r.features);
      pos_roads.push_back(r.label_road);
      y_sev.push_back(r.label_severity == SeverityClass::Severe ? 1 : 0);
    }
  }
  if (X_pos.empty()) throw PreconditionError("train_incident_ensemble: no positive rows");

  EnsembleModel m;
  m.threshold = threshold;
  m.feature_names = table.feature_names;
  m.detector_rows = X_all.size();
  m.localizer_rows = X_pos.size();
  m.severity_rows = X_pos.size();

  TreeEnsembleConfig det = cfg;
  det.objective = Objective::BinaryLogistic;
  m.detector = fit_or_constant(X_all, y_det, {"0", "1"}, table.feature_names, det);

  std::vector<std::string> roads = pos_roads;
  std::sort(roads.begin(), roads.end());
  roads.erase(std::unique(roads.begin(), roads.end()), roads.end());
  std::vector<int> y_loc;
  for (const auto& r : pos_roads) y_loc.push_back(static_cast<int>(std::lower_bound(roads.begin(), roads.end(), r) - roads.begin()));
  TreeEnsembleConfig loc = cfg;
  loc.objective = Objective::Softmax;
  m.localizer = fit_or_constant(X_pos, y_loc, roads, table.feature_names, loc);

  TreeEnsembleConfig sev = cfg;
  sev.objective = Objective::BinaryLogistic;
  m.severity = fit_or_constant(X_pos, y_sev, {to_string(SeverityClass::Minor), to_string(SeverityClass::Severe)},
                               table.feature_names, sev);
  return m;
}

IncidentPrediction infer(const EnsembleModel& model, const FeatureRow& row) {
  IncidentPrediction p;
  p.window_end_s = row.window_end_s;
  const auto det = predict_proba(model.detector, row.features);
  p.score = model.detector.constant ? (model.detector.classes[0] == "1" ? 1.0 : 0.0) : det[1];
  p.detected = p.score >= model.threshold;
  if (p.detected) {
    p.road_label = model.localizer.classes[predict_class(model.localizer, row.features)];
    p.severity = parse_severity(model.severity.classes[predict_class(model.severity, row.features)]);
  }
  return p;
}

std::vector<IncidentPrediction> infer_all(const EnsembleModel& model, const FeatureTable& table) {
  if (table.feature_names != model.feature_names) {
    throw PreconditionError("feature table schema does not match the model schema");
  }
  std::vector<IncidentPrediction> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) out.push_back(infer(model, r));
  return out;
}

std::string serialize_ensemble(const EnsembleModel& model) {
  nlohmann::json doc = {{"format", kFormatTag},
                        {"threshold", model.threshold},
                        {"feature_names", model.feature_names},
                        {"rows", {{"detector", model.detector_rows},
                                  {"localizer", model.localizer_rows},
                                  {"severity", model.severity_rows}}},
                        {"detector", tree_ensemble_to_json(model.detector)},
                        {"localizer", tree_ensemble_to_json(model.localizer)},
                        {"severity", tree_ensemble_to_json(model.severity)}};
  return doc.dump(1);
}

EnsembleModel parse_ensemble(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != kFormatTag) throw ParseError("not an incidentlab.ensemble/1 document");
    EnsembleModel m;
    m.threshold = doc.at("threshold").get<double>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.detector_rows = doc.at("rows").at("detector").get<std::size_t>();
    m.localizer_rows = doc.at("rows").at("localizer").get<std::size_t>();
    m.severity_rows = doc.at("rows").at("severity").get<std::size_t>();
    m.detector = tree_ensemble_from_json(doc.at("detector"));
    m.localizer = tree_ensemble_from_json(doc.at("localizer"));
    m.severity = tree_ensemble_from_json(doc.at("severity"));
    for (const auto* t : {&m.detector, &m.localizer, &m.severity}) {
      if (t->feature_names != m.feature_names) throw ParseError("sub-model schema differs from the ensemble schema");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ensemble document: ") + e.what());
  }
}

void save_ensemble(const EnsembleModel& model, const std::string& path) { write_text(path, serialize_ensemble(model)); }

EnsembleModel load_ensemble(const std::string& path) {
  std::string text;
  for (const auto& l : read_lines(path)) text += l + "\n";
  try {
    return parse_ensemble(text);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace incidentlab
