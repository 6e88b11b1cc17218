#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "incidentlab/common.hpp"

namespace incidentlab {

enum class Objective { BinaryLogistic, Softmax };

std::string to_string(Objective o);
Objective parse_objective(const std::string& s);

struct TreeEnsembleConfig {
  int n_trees = 200;  // boosting rounds; softmax grows one tree per class per round
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double subsample = 0.8;
  Objective objective = Objective::BinaryLogistic;
  std::uint64_t seed = 1;
  double l2 = 1.0;
  int max_bins = 1024;
  /// Binary only: weight positives by negatives / positives.
  bool balance_classes = true;

  void validate() const;
  bool operator==(const TreeEnsembleConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf contribution, learning rate already applied
  double gain = 0.0;
  int samples = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Rows go left iff x < threshold; NaN follows missing_left.
struct RegressionTree {
  int output = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double eval(const std::vector<double>& row) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

struct TreeEnsemble {
  TreeEnsembleConfig config;
  std::vector<std::string> feature_names;
  std::uint64_t schema_hash = 0;
  std::vector<std::string> classes;
  std::vector<double> base_score;  // one raw margin per output
  std::vector<RegressionTree> trees;
  std::vector<double> train_loss;  // training loss after each boosting round
  bool constant = false;           // degenerate single-class predictor

  std::size_t n_outputs() const { return base_score.size(); }
  bool operator==(const TreeEnsemble&) const = default;
};

/// FNV-1a over the ordered feature names.
std::uint64_t schema_hash(const std::vector<std::string>& feature_names);

/// Trains on rows X (NaN = missing) with integer labels y indexing `classes`.
/// Binary logistic needs exactly two classes (index 1 is positive).
/// Throws PreconditionError on an empty table or a single-class target.
TreeEnsemble train_tree_ensemble(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                                 const std::vector<std::string>& classes,
                                 const std::vector<std::string>& feature_names, const TreeEnsembleConfig& cfg);

/// Predicts `cls` with probability 1 for every row.
TreeEnsemble constant_ensemble(const std::string& cls, const std::vector<std::string>& feature_names,
                               const TreeEnsembleConfig& cfg);

std::vector<double> predict_margin(const TreeEnsemble& model, const std::vector<double>& row);
/// Class probabilities aligned with model.classes.
std::vector<double> predict_proba(const TreeEnsemble& model, const std::vector<double>& row);
std::size_t predict_class(const TreeEnsemble& model, const std::vector<double>& row);

/// Self-describing JSON document tagged "incidentlab.gbdt/1".
std::string serialize_tree_ensemble(const TreeEnsemble& model);
TreeEnsemble parse_tree_ensemble(const std::string& text);

}  // namespace incidentlab
