#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace paneldml {

enum class LearnerKind { Ols, Ridge, Forest };

struct ForestParams {
    int n_trees = 200;
    int max_depth = 8;
    int min_leaf = 5;
    double feature_subsample = 1.0 / 3.0; // fraction of features tried per split
    bool bootstrap = true;
};

/// Nuisance learner specification. The seed fully determines forest
/// randomness; ols/ridge are deterministic.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::Forest;
    double ridge_lambda = 0.0;
    ForestParams forest;
    std::uint64_t seed = 0;

    void validate() const;
    static LearnerSpec ols();
    static LearnerSpec ridge(double lambda, std::uint64_t seed = 0);
    static LearnerSpec default_forest(std::uint64_t seed);
};

/// K-fold partition of {0..n-1}; fold sizes differ by at most one and the
/// assignment is reproducible from the seed.
struct FoldPlan {
    std::size_t n = 0;
    int k = 0;
    std::vector<int> assignment; // sample index -> fold id

    std::vector<std::size_t> fold_indices(int fold) const;
    std::vector<std::size_t> complement_indices(int fold) const;
};

FoldPlan kfold(std::size_t n, int k, std::uint64_t seed);

namespace detail {

struct LinearModel {
    Eigen::VectorXd coefficients; // raw feature space
    double intercept = 0.0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const;
};

struct ForestModel {
    std::vector<Tree> trees;
};

} // namespace detail

/// A fitted learner; predict is deterministic given the model.
class FittedModel {
  public:
    explicit FittedModel(detail::LinearModel m);
    FittedModel(detail::ForestModel m, Eigen::Index width);

    Eigen::Index feature_width() const { return width_; }
    /// Throws DataError on feature-width mismatch.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  private:
    std::variant<detail::LinearModel, detail::ForestModel> impl_;
    Eigen::Index width_ = 0;
};

/// Fits the requested learner.
///  - ols: unregularized least squares; rank-deficient designs are an error.
///  - ridge: penalized least squares on train-standardized features with an
///    unpenalized intercept.
///  - forest: variance-minimizing CART regression trees on bootstrap
///    samples; per-tree seeds derive from spec.seed, so parallel fitting is
///    bit-identical to sequential.
FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Out-of-fold predictions: sample i is predicted by the model trained on
/// every fold except fold(i).
Eigen::VectorXd cross_fit(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, const FoldPlan& plan);

} // namespace paneldml
