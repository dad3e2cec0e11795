#include "slp/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace slp {

double RegressionTree::predict(const Eigen::VectorXd& x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out(r) = predict(Eigen::VectorXd(x.row(r).transpose()));
  return out;
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best exact-greedy split of the rows by squared-error reduction.
// Ties resolved toward the lowest feature index, then lowest threshold,
// by scanning in that order with strictly-greater improvement.
SplitChoice best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
                       const std::vector<int>& rows, int min_samples_leaf) {
  SplitChoice best;
  const auto n = static_cast<int>(rows.size());
  if (n < 2 * min_samples_leaf) return best;

  double total_sum = 0.0;
  for (int row : rows) total_sum += r(row);
  const double parent_score = total_sum * total_sum / n;

  std::vector<std::pair<double, double>> vals(rows.size());  // (feature value, residual)
  for (int f = 0; f < x.cols(); ++f) {
    for (std::size_t k = 0; k < rows.size(); ++k)
      vals[k] = {x(rows[k], f), r(rows[k])};
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double left_sum = 0.0;
    for (int k = 0; k < n - 1; ++k) {
      left_sum += vals[static_cast<std::size_t>(k)].second;
      if (vals[static_cast<std::size_t>(k)].first ==
          vals[static_cast<std::size_t>(k + 1)].first)
        continue;  // not a boundary between distinct values
      const int n_left = k + 1, n_right = n - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      const double right_sum = total_sum - left_sum;
      const double gain = left_sum * left_sum / n_left +
                          right_sum * right_sum / n_right - parent_score;
      if (gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) {
        best.found = true;
        best.feature = f;
        best.threshold = 0.5 * (vals[static_cast<std::size_t>(k)].first +
                                vals[static_cast<std::size_t>(k + 1)].first);
        best.gain = gain;
      }
    }
  }
  if (best.gain <= 1e-12) best.found = false;
  return best;
}

int grow(RegressionTree& tree, const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
         std::vector<int> rows, int depth_left, int min_samples_leaf) {
  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  double mean = 0.0;
  for (int row : rows) mean += r(row);
  mean /= static_cast<double>(rows.size());
  tree.nodes[static_cast<std::size_t>(node_id)].value = mean;

  if (depth_left <= 0) return node_id;
  SplitChoice split = best_split(x, r, rows, min_samples_leaf);
  if (!split.found) return node_id;

  std::vector<int> left_rows, right_rows;
  for (int row : rows)
    (x(row, split.feature) <= split.threshold ? left_rows : right_rows).push_back(row);
  rows.clear();
  rows.shrink_to_fit();

  int left = grow(tree, x, r, std::move(left_rows), depth_left - 1, min_samples_leaf);
  int right = grow(tree, x, r, std::move(right_rows), depth_left - 1, min_samples_leaf);
  TreeNode& n = tree.nodes[static_cast<std::size_t>(node_id)];
  n.feature = split.feature;
  n.threshold = split.threshold;
  n.left = left;
  n.right = right;
  return node_id;
}

}  // namespace

RegressionTree tree_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& r,
                        int max_depth, int min_samples_leaf) {
  if (x.rows() != r.size()) throw std::invalid_argument("row count mismatch");
  if (x.rows() == 0) throw std::invalid_argument("empty training data");
  RegressionTree tree;
  std::vector<int> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  grow(tree, x, r, std::move(rows), max_depth, std::max(1, min_samples_leaf));
  return tree;
}

GbtModel gbt_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                 const GbtParams& params) {
  if (x.rows() == 0) throw std::invalid_argument("empty training data");
  if (params.learning_rate <= 0 || params.learning_rate > 1)
    throw std::invalid_argument("learning_rate must be in (0, 1]");
  if (params.n_trees < 0 || params.max_depth < 0 || params.min_samples_leaf < 1)
    throw std::invalid_argument("invalid GbtParams");

  Eigen::Index fit_rows = x.rows();
  if (params.patience > 0) {
    auto holdout = static_cast<Eigen::Index>(
        std::floor(params.holdout_fraction * static_cast<double>(x.rows())));
    if (holdout >= 1 && x.rows() - holdout >= 1) fit_rows = x.rows() - holdout;
  }
  const Eigen::MatrixXd x_fit = x.topRows(fit_rows);
  const Eigen::VectorXd z_fit = z.head(fit_rows);
  const Eigen::MatrixXd x_hold = x.bottomRows(x.rows() - fit_rows);
  const Eigen::VectorXd z_hold = z.tail(x.rows() - fit_rows);

  GbtModel model;
  model.learning_rate = params.learning_rate;
  model.n_features = static_cast<int>(x.cols());
  model.base = z_fit.mean();

  Eigen::VectorXd pred = Eigen::VectorXd::Constant(fit_rows, model.base);
  Eigen::VectorXd hold_pred = Eigen::VectorXd::Constant(x_hold.rows(), model.base);
  double best_hold_sse = (z_hold - hold_pred).squaredNorm();
  std::size_t best_round = 0;
  int stale = 0;

  const double scale = std::max(1.0, z_fit.cwiseAbs().maxCoeff());
  for (int k = 0; k < params.n_trees; ++k) {
    Eigen::VectorXd residual = z_fit - pred;
    RegressionTree tree = tree_fit(x_fit, residual, params.max_depth,
                                   params.min_samples_leaf);
    // A splitless tree whose leaf is numerically zero cannot reduce the
    // loss, nor can any later round; stop instead of stacking null stages.
    if (tree.nodes.size() == 1 &&
        std::abs(tree.nodes[0].value) <= 1e-12 * scale)
      break;
    pred += params.learning_rate * tree.predict(x_fit);
    model.trees.push_back(std::move(tree));

    if (params.patience > 0 && x_hold.rows() > 0) {
      hold_pred += params.learning_rate * model.trees.back().predict(x_hold);
      double sse = (z_hold - hold_pred).squaredNorm();
      if (sse < best_hold_sse) {
        best_hold_sse = sse;
        best_round = model.trees.size();
        stale = 0;
      } else if (++stale >= params.patience) {
        model.trees.resize(best_round);
        break;
      }
    }
  }
  return model;
}

Eigen::VectorXd gbt_predict(const GbtModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<int>(x.cols()) != model.n_features)
    throw std::invalid_argument("feature width mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), model.base);
  for (const auto& tree : model.trees) out += model.learning_rate * tree.predict(x);
  return out;
}

double gbt_predict(const GbtModel& model, const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != model.n_features)
    throw std::invalid_argument("feature width mismatch");
  double out = model.base;
  for (const auto& tree : model.trees) out += model.learning_rate * tree.predict(x);
  return out;
}

}  // namespace slp
