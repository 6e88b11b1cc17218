#include "incidentlab/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "gbdt_json.hpp"

namespace incidentlab {

namespace {

constexpr std::uint16_t kMissingCode = std::numeric_limits<std::uint16_t>::max();
constexpr double kMinHessian = 1e-16;
const char* const kFormatTag = "incidentlab.gbdt/1";

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : z) v /= s;
}

// Candidate thresholds per feature: midpoints between consecutive distinct
// values, or between quantile cut values when there are too many.
std::vector<double> feature_thresholds(std::vector<double> values, int max_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> uniq = values;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> thr;
  if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t k = 0; k + 1 < uniq.size(); ++k) thr.push_back(0.5 * (uniq[k] + uniq[k + 1]));
    return thr;
  }
  const std::size_t n = values.size();
  for (int q = 1; q < max_bins; ++q) {
    const double cut = values[static_cast<std::size_t>(q) * n / static_cast<std::size_t>(max_bins)];
    auto it = std::lower_bound(uniq.begin(), uniq.end(), cut);
    if (it == uniq.begin()) continue;
    const double t = 0.5 * (*(it - 1) + *it);
    if (thr.empty() || t > thr.back()) thr.push_back(t);
  }
  return thr;
}

struct Binned {
  std::vector<std::vector<double>> thresholds;   // [feature]
  std::vector<std::vector<std::uint16_t>> codes;  // [feature][row]
};

Binned bin_features(const std::vector<std::vector<double>>& X, std::size_t nf, int max_bins) {
  Binned b;
  b.thresholds.resize(nf);
  b.codes.assign(nf, std::vector<std::uint16_t>(X.size(), kMissingCode));
  for (std::size_t j = 0; j < nf; ++j) {
    std::vector<double> vals;
    vals.reserve(X.size());
    for (const auto& r : X) {
      if (!is_missing(r[j])) vals.push_back(r[j]);
    }
    b.thresholds[j] = feature_thresholds(std::move(vals), max_bins);
    const auto& t = b.thresholds[j];
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double x = X[i][j];
      if (!is_missing(x)) b.codes[j][i] = static_cast<std::uint16_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
    }
  }
  return b;
}

struct Split {
  double gain = 0.0;
  int feature = -1;
  std::size_t bin = 0;
  bool missing_left = true;
};

class TreeBuilder {
 public:
  TreeBuilder(const Binned& binned, const std::vector<double>& g, const std::vector<double>& h,
              const TreeEnsembleConfig& cfg)
      : b_(binned), g_(g), h_(h), cfg_(cfg) {}

  RegressionTree build(std::vector<std::size_t> rows, int output) {
    tree_ = RegressionTree{};
    tree_.output = output;
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  double score(double G, double H) const { return G * G / (H + cfg_.l2); }

  int grow(std::vector<std::size_t> rows, int depth) {
    double G = 0.0, H = 0.0;
    for (auto i : rows) {
      G += g_[i];
      H += h_[i];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].samples = static_cast<int>(rows.size());
    tree_.nodes[id].value = -cfg_.learning_rate * G / (H + cfg_.l2);

    const auto n = static_cast<int>(rows.size());
    if (depth >= cfg_.max_depth || n < 2 * cfg_.min_samples_leaf) return id;
    const Split best = find_split(rows, G, H);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    const auto& codes = b_.codes[static_cast<std::size_t>(best.feature)];
    for (auto i : rows) {
      const auto c = codes[i];
      const bool go_left = c == kMissingCode ? best.missing_left : c <= best.bin;
      (go_left ? left : right).push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = best.feature;
    node.threshold = b_.thresholds[static_cast<std::size_t>(best.feature)][best.bin];
    node.missing_left = best.missing_left;
    node.gain = best.gain;
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return id;
  }

  Split find_split(const std::vector<std::size_t>& rows, double G, double H) const {
    Split best;
    const double parent = score(G, H);
    const int min_leaf = cfg_.min_samples_leaf;
    for (std::size_t j = 0; j < b_.codes.size(); ++j) {
      const std::size_t nb = b_.thresholds[j].size() + 1;
      if (nb < 2) continue;
      std::vector<double> hg(nb, 0.0), hh(nb, 0.0);
      std::vector<int> hn(nb, 0);
      double mg = 0.0, mh = 0.0;
      int mn = 0;
      const auto& codes = b_.codes[j];
      for (auto i : rows) {
        const auto c = codes[i];
        if (c == kMissingCode) {
          mg += g_[i];
          mh += h_[i];
          ++mn;
        } else {
          hg[c] += g_[i];
          hh[c] += h_[i];
          ++hn[c];
        }
      }
      const double pg = G - mg, ph = H - mh;
      const int pn = static_cast<int>(rows.size()) - mn;
      double lg = 0.0, lh = 0.0;
      int ln = 0;
      for (std::size_t k = 0; k + 1 < nb; ++k) {
        lg += hg[k];
        lh += hh[k];
        ln += hn[k];
        if (hn[k] == 0 && k > 0) continue;  // same partition as the previous threshold
        for (int dir = 0; dir < 2; ++dir) {
          const bool miss_left = dir == 0;
          const double GL = lg + (miss_left ? mg : 0.0), HL = lh + (miss_left ? mh : 0.0);
          const int NL = ln + (miss_left ? mn : 0);
          const double GR = pg - lg + (miss_left ? 0.0 : mg), HR = ph - lh + (miss_left ? 0.0 : mh);
          const int NR = pn - ln + (miss_left ? 0 : mn);
          if (NL < min_leaf || NR < min_leaf) continue;
          const double gain = 0.5 * (score(GL, HL) + score(GR, HR) - parent);
          if (gain > best.gain + 1e-12) {
            best = Split{gain, static_cast<int>(j), k, miss_left};
          }
        }
      }
    }
    return best;
  }

  const Binned& b_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const TreeEnsembleConfig& cfg_;
  RegressionTree tree_;
};

double binary_loss(const std::vector<double>& margin, const std::vector<int>& y, const std::vector<double>& w) {
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log(1 + exp(-s z)) with s = +-1, computed stably
    const double z = y[i] == 1 ? margin[i] : -margin[i];
    loss += w[i] * (z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)));
    wsum += w[i];
  }
  return loss / wsum;
}

double softmax_loss(const std::vector<std::vector<double>>& margin, const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto& z = margin[i];
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    loss += mx + std::log(s) - z[static_cast<std::size_t>(y[i])];
  }
  return loss / static_cast<double>(y.size());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string to_string(Objective o) { return o == Objective::BinaryLogistic ? "binary-logistic" : "softmax-multiclass"; }

Objective parse_objective(const std::string& s) {
  if (s == "binary-logistic") return Objective::BinaryLogistic;
  if (s == "softmax-multiclass") return Objective::Softmax;
  throw ParseError("unknown objective '" + s + "'");
}

void TreeEnsembleConfig::validate() const {
  if (n_trees < 1) throw ValidationError("n_trees must be at least 1");
  if (max_depth < 1) throw ValidationError("max_depth must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning_rate must lie in (0, 1]");
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be at least 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ValidationError("subsample must lie in (0, 1]");
  if (!(l2 >= 0.0)) throw ValidationError("l2 must be non-negative");
  if (max_bins < 2 || max_bins > 65535) throw ValidationError("max_bins must lie in [2, 65535]");
}

double RegressionTree::eval(const std::vector<double>& row) const {
  int k = 0;
  while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(k)];
    const double x = row[static_cast<std::size_t>(n.feature)];
    const bool left = is_missing(x) ? n.missing_left : x < n.threshold;
    k = left ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(k)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::uint64_t schema_hash(const std::vector<std::string>& feature_names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& name : feature_names) {
    for (unsigned char c : name) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;  // separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

TreeEnsemble train_tree_ensemble(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                                 const std::vector<std::string>& classes,
                                 const std::vector<std::string>& feature_names, const TreeEnsembleConfig& cfg) {
  cfg.validate();
  if (X.empty()) throw PreconditionError("train_tree_ensemble: empty table");
  if (X.size() != y.size()) throw PreconditionError("train_tree_ensemble: row and label counts differ");
  const std::size_t nf = feature_names.size();
  const std::size_t K = classes.size();
  for (const auto& r : X) {
    if (r.size() != nf) throw PreconditionError("train_tree_ensemble: row width does not match the schema");
  }
  std::vector<std::size_t> class_count(K, 0);
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= K) throw PreconditionError("train_tree_ensemble: label out of range");
    ++class_count[static_cast<std::size_t>(c)];
  }
  if (std::count_if(class_count.begin(), class_count.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw PreconditionError("train_tree_ensemble: target has a single class");
  }
  const bool binary = cfg.objective == Objective::BinaryLogistic;
  if (binary && K != 2) throw PreconditionError("train_tree_ensemble: binary objective needs exactly two classes");

  TreeEnsemble model;
  model.config = cfg;
  model.feature_names = feature_names;
  model.schema_hash = schema_hash(feature_names);
  model.classes = classes;

  const std::size_t n = X.size();
  const Binned binned = bin_features(X, nf, cfg.max_bins);
  Rng rng(cfg.seed);
  std::vector<double> g(n), h(n);

  auto sample_rows = [&] {
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (cfg.subsample >= 1.0 || rng.uniform() < cfg.subsample) rows.push_back(i);
    }
    if (rows.empty()) rows.push_back(rng.uniform_index(n));
    return rows;
  };

  if (binary) {
    const double pos = static_cast<double>(class_count[1]);
    const double neg = static_cast<double>(class_count[0]);
    const double pos_w = cfg.balance_classes ? neg / pos : 1.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] == 1 ? pos_w : 1.0;
    const double base = std::log(pos * pos_w / neg);
    model.base_score = {base};
    std::vector<double> margin(n, base);
    for (int t = 0; t < cfg.n_trees; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(margin[i]);
        g[i] = w[i] * (p - y[i]);
        h[i] = std::max(w[i] * p * (1.0 - p), kMinHessian);
      }
      TreeBuilder builder(binned, g, h, cfg);
      model.trees.push_back(builder.build(sample_rows(), 0));
      for (std::size_t i = 0; i < n; ++i) margin[i] += model.trees.back().eval(X[i]);
      model.train_loss.push_back(binary_loss(margin, y, w));
    }
    return model;
  }

  model.base_score.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double prior = (static_cast<double>(class_count[k]) + 1e-6) / static_cast<double>(n);
    model.base_score[k] = std::log(prior);
  }
  std::vector<std::vector<double>> margin(n, model.base_score);
  std::vector<std::vector<double>> prob(n);
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = margin[i];
      softmax_inplace(prob[i]);
    }
    const auto rows = sample_rows();
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i][k];
        g[i] = p - (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0);
        h[i] = std::max(p * (1.0 - p), kMinHessian);
      }
      TreeBuilder builder(binned, g, h, cfg);
      model.trees.push_back(builder.build(rows, static_cast<int>(k)));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k) margin[i][k] += model.trees[model.trees.size() - K + k].eval(X[i]);
    }
    model.train_loss.push_back(softmax_loss(margin, y));
  }
  return model;
}

TreeEnsemble constant_ensemble(const std::string& cls, const std::vector<std::string>& feature_names,
                               const TreeEnsembleConfig& cfg) {
  TreeEnsemble m;
  m.config = cfg;
  m.feature_names = feature_names;
  m.schema_hash = schema_hash(feature_names);
  m.classes = {cls};
  m.base_score = {0.0};
  m.constant = true;
  return m;
}

std::vector<double> predict_margin(const TreeEnsemble& model, const std::vector<double>& row) {
  if (row.size() != model.feature_names.size()) {
    throw PreconditionError("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                            std::to_string(model.feature_names.size()));
  }
  std::vector<double> m = model.base_score;
  for (const auto& t : model.trees) m[static_cast<std::size_t>(t.output)] += t.eval(row);
  return m;
}

std::vector<double> predict_proba(const TreeEnsemble& model, const std::vector<double>& row) {
  auto m = predict_margin(model, row);
  if (model.constant) return {1.0};
  if (model.config.objective == Objective::BinaryLogistic) {
    const double p = sigmoid(m[0]);
    return {1.0 - p, p};
  }
  softmax_inplace(m);
  return m;
}

std::size_t predict_class(const TreeEnsemble& model, const std::vector<double>& row) {
  const auto p = predict_proba(model, row);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

nlohmann::json tree_ensemble_to_json(const TreeEnsemble& model) {
  using nlohmann::json;
  const auto& c = model.config;
  json cfg = {{"n_trees", c.n_trees},
              {"max_depth", c.max_depth},
              {"learning_rate", c.learning_rate},
              {"min_samples_leaf", c.min_samples_leaf},
              {"subsample", c.subsample},
              {"objective", to_string(c.objective)},
              {"seed", c.seed},
              {"l2", c.l2},
              {"max_bins", c.max_bins},
              {"balance_classes", c.balance_classes}};
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.value}, {"samples", n.samples}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"missing_left", n.missing_left},
                         {"left", n.left},
                         {"right", n.right},
                         {"gain", n.gain},
                         {"samples", n.samples}});
      }
    }
    trees.push_back({{"output", t.output}, {"nodes", nodes}});
  }
  return {{"format", kFormatTag},
          {"config", cfg},
          {"feature_names", model.feature_names},
          {"schema_hash", hex64(model.schema_hash)},
          {"classes", model.classes},
          {"base_score", model.base_score},
          {"constant", model.constant},
          {"train_loss", model.train_loss},
          {"trees", trees}};
}

TreeEnsemble tree_ensemble_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormatTag) throw ParseError("not an incidentlab.gbdt/1 document");
    TreeEnsemble m;
    const auto& cfg = doc.at("config");
    m.config.n_trees = cfg.at("n_trees").get<int>();
    m.config.max_depth = cfg.at("max_depth").get<int>();
    m.config.learning_rate = cfg.at("learning_rate").get<double>();
    m.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
    m.config.subsample = cfg.at("subsample").get<double>();
    m.config.objective = parse_objective(cfg.at("objective").get<std::string>());
    m.config.seed = cfg.at("seed").get<std::uint64_t>();
    m.config.l2 = cfg.at("l2").get<double>();
    m.config.max_bins = cfg.at("max_bins").get<int>();
    m.config.balance_classes = cfg.at("balance_classes").get<bool>();
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.schema_hash = std::stoull(doc.at("schema_hash").get<std::string>(), nullptr, 16);
    if (m.schema_hash != schema_hash(m.feature_names)) throw ParseError("schema hash does not match feature names");
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    m.base_score = doc.at("base_score").get<std::vector<double>>();
    m.constant = doc.at("constant").get<bool>();
    m.train_loss = doc.at("train_loss").get<std::vector<double>>();
    if (m.base_score.empty() || m.classes.empty()) throw ParseError("model has no outputs");
    const int nf = static_cast<int>(m.feature_names.size());
    for (const auto& jt : doc.at("trees")) {
      RegressionTree t;
      t.output = jt.at("output").get<int>();
      if (t.output < 0 || static_cast<std::size_t>(t.output) >= m.base_score.size()) {
        throw ParseError("tree output index out of range");
      }
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.samples = jn.at("samples").get<int>();
        if (jn.contains("leaf")) {
          n.value = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.missing_left = jn.at("missing_left").get<bool>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          n.gain = jn.at("gain").get<double>();
        }
        t.nodes.push_back(n);
      }
      const int nn = static_cast<int>(t.nodes.size());
      if (nn == 0) throw ParseError("empty tree");
      for (int i = 0; i < nn; ++i) {
        const auto& n = t.nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) continue;
        if (n.feature >= nf) throw ParseError("split feature outside the schema");
        if (n.left <= i || n.right <= i || n.left >= nn || n.right >= nn) throw ParseError("bad child index");
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

std::string serialize_tree_ensemble(const TreeEnsemble& model) { return tree_ensemble_to_json(model).dump(1); }

TreeEnsemble parse_tree_ensemble(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model is not valid JSON: ") + e.what());
  }
  return tree_ensemble_from_json(doc);
}

}  // namespace incidentlab
