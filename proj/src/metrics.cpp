#include "incidentlab/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "incidentlab/keyvalue.hpp"

namespace incidentlab {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : "undefined"; }

}  // namespace

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) {
    throw PreconditionError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(actual.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) {
      ++(actual[i] ? c.tp : c.fp);
    } else {
      ++(actual[i] ? c.fn : c.tn);
    }
  }
  return c;
}

std::optional<double> auc_roc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw PreconditionError("auc_roc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += midrank;
        pos += 1.0;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

EventDetection detect_events(const std::vector<std::int64_t>& window_ends, const std::vector<bool>& predicted,
                             const std::vector<IncidentSpec>& incidents, std::int64_t grace_s) {
  if (window_ends.size() != predicted.size()) throw PreconditionError("detect_events: length mismatch");
  std::vector<std::int64_t> alarms;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) alarms.push_back(window_ends[i]);
  }
  std::sort(alarms.begin(), alarms.end());
  EventDetection ev;
  ev.total = static_cast<std::int64_t>(incidents.size());
  double delay_sum = 0.0;
  for (const auto& inc : incidents) {
    auto it = std::lower_bound(alarms.begin(), alarms.end(), inc.onset_s);
    if (it != alarms.end() && *it <= inc.end_s() + grace_s) {
      ev.delays.emplace_back(*it - inc.onset_s);
      delay_sum += static_cast<double>(*it - inc.onset_s);
      ++ev.detected;
    } else {
      ev.delays.emplace_back(std::nullopt);
    }
  }
  ev.fraction = ratio(static_cast<double>(ev.detected), static_cast<double>(ev.total));
  ev.mttd_s = ratio(delay_sum, static_cast<double>(ev.detected));
  return ev;
}

EvalReport summary(const ConfusionCounts& c, const std::vector<double>& scores, const std::vector<bool>& labels,
                   const EventDetection& events) {
  EvalReport r;
  r.counts = c;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  r.dr = ratio(tp, tp + fn);
  r.recall = r.dr;
  r.far = ratio(fp, fp + tn);
  r.specificity = ratio(tn, tn + fp);
  r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  r.precision = ratio(tp, tp + fp);
  if (r.precision && r.recall) r.f1 = ratio(2.0 * *r.precision * *r.recall, *r.precision + *r.recall);
  r.auc_roc = auc_roc(scores, labels);
  r.event_detection_fraction = events.fraction;
  r.mttd_s = events.mttd_s;
  r.detected_incidents = events.detected;
  r.total_incidents = events.total;
  return r;
}

EvalReport evaluate_predictions(const FeatureTable& table, const std::vector<IncidentPrediction>& predictions,
                                std::int64_t grace_s) {
  if (predictions.size() != table.rows.size()) throw PreconditionError("evaluate: one prediction per row required");
  std::vector<bool> pred, actual;
  std::vector<double> scores;
  std::vector<std::int64_t> ends;
  std::int64_t violations = 0;
  std::int64_t loc_ok = 0, sev_ok = 0, both = 0;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> by_road;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    const auto& row = table.rows[i];
    pred.push_back(p.detected);
    actual.push_back(row.label_incident);
    scores.push_back(p.score);
    ends.push_back(row.window_end_s);
    const bool gated = p.road_label.has_value() == p.detected && p.severity.has_value() == p.detected;
    if (!gated) ++violations;
    if (row.label_incident && p.detected) {
      ++both;
      const bool ok = p.road_label == row.label_road;
      loc_ok += ok;
      sev_ok += p.severity == row.label_severity;
      auto& slot = by_road[row.label_road];
      slot.first += ok;
      slot.second += 1;
    }
  }
  auto r = summary(confusion(pred, actual), scores, actual, detect_events(ends, pred, table.incidents, grace_s));
  r.localization_accuracy = ratio(static_cast<double>(loc_ok), static_cast<double>(both));
  r.severity_accuracy = ratio(static_cast<double>(sev_ok), static_cast<double>(both));
  r.localization_by_road = std::move(by_road);
  r.gating_violations = violations;
  return r;
}

std::string format_report(const EvalReport& r) {
  KeyValueDoc d;
  d.set("rows", r.counts.total());
  d.set("tp", r.counts.tp);
  d.set("fp", r.counts.fp);
  d.set("tn", r.counts.tn);
  d.set("fn", r.counts.fn);
  d.set("dr_window", opt(r.dr));
  d.set("far", opt(r.far));
  d.set("accuracy", opt(r.accuracy));
  d.set("precision", opt(r.precision));
  d.set("recall", opt(r.recall));
  d.set("f1", opt(r.f1));
  d.set("specificity", opt(r.specificity));
  d.set("auc_roc", opt(r.auc_roc));
  d.set("event_detection_fraction", opt(r.event_detection_fraction));
  d.set("detected_incidents", r.detected_incidents);
  d.set("total_incidents", r.total_incidents);
  d.set("mttd_s", opt(r.mttd_s));
  d.set("localization_accuracy", opt(r.localization_accuracy));
  d.set("severity_accuracy", opt(r.severity_accuracy));
  for (const auto& [road, ct] : r.localization_by_road) {
    d.set("localization_accuracy." + road,
          opt(ratio(static_cast<double>(ct.first), static_cast<double>(ct.second))));
  }
  d.set("gating_violations", r.gating_violations);
  return d.str();
}

std::string report_csv_header() {
  return "label,rows,tp,fp,tn,fn,dr_window,far,accuracy,precision,recall,f1,specificity,auc_roc,"
         "event_detection_fraction,detected_incidents,total_incidents,mttd_s,localization_accuracy,severity_accuracy";
}

std::string report_csv_row(const EvalReport& r, const std::string& label) {
  auto f = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return label + "," + std::to_string(r.counts.total()) + "," + std::to_string(r.counts.tp) + "," +
         std::to_string(r.counts.fp) + "," + std::to_string(r.counts.tn) + "," + std::to_string(r.counts.fn) + "," +
         f(r.dr) + "," + f(r.far) + "," + f(r.accuracy) + "," + f(r.precision) + "," + f(r.recall) + "," + f(r.f1) +
         "," + f(r.specificity) + "," + f(r.auc_roc) + "," + f(r.event_detection_fraction) + "," +
         std::to_string(r.detected_incidents) + "," + std::to_string(r.total_incidents) + "," + f(r.mttd_s) + "," +
         f(r.localization_accuracy) + "," + f(r.severity_accuracy);
}

}  // namespace incidentlab
