#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "incidentlab/metrics.hpp"

using namespace incidentlab;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      den += 1;
    }
  }
  return num / den;
}

IncidentSpec incident(std::int64_t onset, std::int64_t duration) {
  IncidentSpec s;
  s.onset_s = onset;
  s.duration_s = duration;
  return s;
}

}  // namespace

TEST(Confusion, SmallExample) {
  const auto c = confusion({true, false, true}, {true, false, false});
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 0}));
  const auto neg = confusion({false, true, false}, {true, false, false});
  EXPECT_EQ(neg, (ConfusionCounts{0, 1, 1, 1}));
  EXPECT_THROW(confusion({true}, {}), PreconditionError);
}

TEST(Confusion, MatchesRecount) {
  Rng r(1);
  std::vector<bool> p, a;
  for (int i = 0; i < 1000; ++i) {
    p.push_back(r.bernoulli(0.3));
    a.push_back(r.bernoulli(0.2));
  }
  const auto c = confusion(p, a);
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tp += p[i] && a[i];
    fp += p[i] && !a[i];
    tn += !p[i] && !a[i];
    fn += !p[i] && a[i];
  }
  EXPECT_EQ(c, (ConfusionCounts{tp, fp, tn, fn}));
  EXPECT_EQ(c.total(), 1000);

  const auto rep = summary(c, {}, {}, EventDetection{});
  EXPECT_DOUBLE_EQ(*rep.dr, double(tp) / double(tp + fn));
  EXPECT_EQ(rep.dr, rep.recall);
  EXPECT_DOUBLE_EQ(*rep.specificity, 1.0 - *rep.far);
  EXPECT_DOUBLE_EQ(*rep.f1, 2 * *rep.precision * *rep.recall / (*rep.precision + *rep.recall));
  EXPECT_DOUBLE_EQ(*rep.accuracy, double(tp + tn) / 1000.0);
}

TEST(Rates, DetectionRate) {
  const auto rep = summary(ConfusionCounts{49, 3, 100, 1}, {}, {}, EventDetection{});
  EXPECT_DOUBLE_EQ(*rep.dr, 0.98);
  EXPECT_DOUBLE_EQ(*rep.far, 3.0 / 103.0);
}

TEST(Rates, UndefinedWhenDenominatorZero) {
  const auto rep = summary(ConfusionCounts{0, 0, 10, 0}, {0.1, 0.2}, {false, false}, EventDetection{});
  EXPECT_FALSE(rep.dr.has_value());
  EXPECT_FALSE(rep.precision.has_value());
  EXPECT_FALSE(rep.f1.has_value());
  EXPECT_FALSE(rep.auc_roc.has_value());
  EXPECT_DOUBLE_EQ(*rep.far, 0.0);
  const auto text = format_report(rep);
  EXPECT_NE(text.find("dr_window = undefined"), std::string::npos) << text;
  EXPECT_NE(text.find("mttd_s = undefined"), std::string::npos);
  const auto row = report_csv_row(rep, "x");
  const auto header = report_csv_header();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(*auc_roc({0.1, 0.2, 0.8, 0.9}, {false, false, true, true}), 1.0);
  EXPECT_DOUBLE_EQ(*auc_roc({0.5, 0.5, 0.5, 0.5}, {false, true, false, true}), 0.5);
  EXPECT_DOUBLE_EQ(*auc_roc({0.9, 0.8, 0.2, 0.1}, {false, false, true, true}), 0.0);
  EXPECT_FALSE(auc_roc({0.3}, {true}).has_value());
}

TEST(Auc, MatchesPairwiseCount) {
  Rng r(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s;
    std::vector<bool> y;
    for (int i = 0; i < 500; ++i) {
      const bool pos = r.bernoulli(0.3);
      y.push_back(pos);
      // coarse scores produce ties
      s.push_back(std::round(10 * (r.uniform() + (pos ? 0.3 : 0.0))) / 10);
    }
    const double auc = *auc_roc(s, y);
    EXPECT_NEAR(auc, pairwise_auc(s, y), 1e-12);
    std::vector<double> t;
    for (double v : s) t.push_back(std::exp(3 * v) - 2);
    EXPECT_NEAR(*auc_roc(t, y), auc, 1e-12);
  }
}

TEST(Events, DelaysAndMttd) {
  const std::vector<std::int64_t> ends{1000, 1180, 2000, 5220, 9000};
  const std::vector<bool> pred{false, true, false, true, true};
  const auto ev = detect_events(ends, pred, {incident(1000, 600), incident(5000, 100), incident(20000, 60)}, 300);
  EXPECT_EQ(ev.total, 3);
  EXPECT_EQ(ev.detected, 2);
  EXPECT_EQ(ev.delays[0], 180);
  EXPECT_EQ(ev.delays[1], 220);
  EXPECT_FALSE(ev.delays[2].has_value());
  EXPECT_DOUBLE_EQ(*ev.mttd_s, 200.0);
  EXPECT_DOUBLE_EQ(*ev.fraction, 2.0 / 3.0);
  // an alarm past end + grace does not count
  const auto late = detect_events({1000 + 600 + 301}, {true}, {incident(1000, 600)}, 300);
  EXPECT_EQ(late.detected, 0);
  EXPECT_FALSE(late.mttd_s.has_value());
  const auto none = detect_events({}, {}, {}, 300);
  EXPECT_FALSE(none.fraction.has_value());
}

TEST(Events, MttdWithinBounds) {
  Rng r(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ends;
    std::vector<bool> pred;
    for (std::int64_t t = 300; t <= 86400; t += 30) {
      ends.push_back(t);
      pred.push_back(r.bernoulli(0.01));
    }
    std::vector<IncidentSpec> incs;
    for (int k = 0; k < 5; ++k) incs.push_back(incident(static_cast<std::int64_t>(r.uniform_index(80000)), 600));
    const auto ev = detect_events(ends, pred, incs, 300);
    if (!ev.mttd_s) continue;
    EXPECT_GE(*ev.mttd_s, 0.0);
    EXPECT_LE(*ev.mttd_s, 900.0);
    for (std::size_t i = 0; i < incs.size(); ++i) {
      if (!ev.delays[i]) continue;
      // the delay points at the first alarm at or after onset
      for (std::size_t j = 0; j < ends.size(); ++j) {
        if (pred[j] && ends[j] >= incs[i].onset_s) {
          EXPECT_EQ(*ev.delays[i], ends[j] - incs[i].onset_s);
          break;
        }
      }
    }
  }
}

TEST(Evaluate, GatingAndLocalization) {
  FeatureTable t;
  t.feature_names = {"x"};
  for (int i = 0; i < 4; ++i) {
    FeatureRow r;
    r.window_end_s = 300 + 30 * i;
    r.features = {0.0};
    r.label_incident = i >= 2;
    if (r.label_incident) {
      r.label_road = "a";
      r.label_severity = SeverityClass::Minor;
    }
    t.rows.push_back(r);
  }
  std::vector<IncidentPrediction> p(4);
  for (int i = 0; i < 4; ++i) p[i].window_end_s = t.rows[i].window_end_s;
  p[1].detected = true;  // false alarm with no road: a gating violation
  p[2] = {t.rows[2].window_end_s, true, 0.9, "a", SeverityClass::Severe};
  p[3] = {t.rows[3].window_end_s, true, 0.8, "b", SeverityClass::Minor};
  const auto rep = evaluate_predictions(t, p, 300);
  EXPECT_EQ(rep.gating_violations, 1);
  EXPECT_DOUBLE_EQ(*rep.localization_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*rep.severity_accuracy, 0.5);
  EXPECT_EQ(rep.localization_by_road.at("a"), (std::pair<std::int64_t, std::int64_t>{1, 2}));
  EXPECT_THROW(evaluate_predictions(t, {}, 300), PreconditionError);
}

TEST(Confusion, PerfectPredictions) {
  EXPECT_EQ(confusion({true, false, true}, {true, false, true}), (ConfusionCounts{2, 0, 1, 0}));
  const auto neg = confusion({false, true, false}, {true, false, true});
  EXPECT_EQ(neg.tp, 0);
  EXPECT_EQ(neg.tn, 0);
}

TEST(Rates, WithinUnitInterval) {
  Rng r(4);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionCounts c{static_cast<std::int64_t>(r.uniform_index(50)), static_cast<std::int64_t>(r.uniform_index(50)),
                      static_cast<std::int64_t>(r.uniform_index(50)), static_cast<std::int64_t>(r.uniform_index(50))};
    const auto rep = summary(c, {}, {}, EventDetection{});
    EXPECT_EQ(rep.dr, rep.recall);
    for (const auto& v : {rep.dr, rep.far, rep.accuracy, rep.precision, rep.f1, rep.specificity}) {
      if (!v) continue;
      EXPECT_GE(*v, 0.0);
      EXPECT_LE(*v, 1.0);
    }
  }
}
