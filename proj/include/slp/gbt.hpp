#pragma once

// Least-squares gradient boosted regression trees with exact greedy split
// search: the nonparametric link behind the GBT model variants.

#include <Eigen/Dense>
#include <vector>

namespace slp {

struct GbtParams {
  int n_trees = 50;
  int max_depth = 6;
  double learning_rate = 0.1;  // in (0, 1]
  int min_samples_leaf = 1;
  // Early stopping on a trailing holdout slice; <= 0 disables it.
  int patience = 0;
  double holdout_fraction = 0.1;
};

struct TreeNode {
  int feature = -1;         // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;       // leaf prediction
  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct GbtModel {
  double base = 0.0;           // training mean of the target
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  int n_features = 0;
};

RegressionTree tree_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
                        int max_depth, int min_samples_leaf);

GbtModel gbt_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                 const GbtParams& params);

Eigen::VectorXd gbt_predict(const GbtModel& model, const Eigen::MatrixXd& x);
double gbt_predict(const GbtModel& model, const Eigen::VectorXd& x);

}  // namespace slp
