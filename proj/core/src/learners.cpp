#include "paneldml/learners.hpp"

#include "paneldml/errors.hpp"
#include "paneldml/parallel.hpp"
#include "paneldml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace paneldml {

void LearnerSpec::validate() const {
    if (ridge_lambda < 0.0) throw ConfigError("learner: ridge penalty must be >= 0");
    if (kind == LearnerKind::Forest) {
        if (forest.n_trees < 1) throw ConfigError("learner: n_trees must be >= 1");
        if (forest.max_depth < 1) throw ConfigError("learner: max_depth must be >= 1");
        if (forest.min_leaf < 1) throw ConfigError("learner: min_leaf must be >= 1");
        if (!(forest.feature_subsample > 0.0 && forest.feature_subsample <= 1.0))
            throw ConfigError("learner: feature_subsample must be in (0, 1]");
    }
}

LearnerSpec LearnerSpec::ols() {
    LearnerSpec s;
    s.kind = LearnerKind::Ols;
    return s;
}

LearnerSpec LearnerSpec::ridge(double lambda, std::uint64_t seed) {
    LearnerSpec s;
    s.kind = LearnerKind::Ridge;
    s.ridge_lambda = lambda;
    s.seed = seed;
    return s;
}

LearnerSpec LearnerSpec::default_forest(std::uint64_t seed) {
    LearnerSpec s;
    s.kind = LearnerKind::Forest;
    s.seed = seed;
    return s;
}

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan kfold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw ConfigError("kfold: K must satisfy 2 <= K <= n (K=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    FoldPlan plan;
    plan.n = n;
    plan.k = k;
    plan.assignment.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        plan.assignment[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    return plan;
}

namespace {

void check_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (!X.allFinite() || !y.allFinite()) throw DataError("learner: non-finite input");
    if (X.rows() != y.size()) throw DataError("learner: X rows != y length");
    if (X.rows() < 2) throw DataError("learner: need at least 2 samples");
}

detail::LinearModel fit_linear(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    detail::LinearModel model;

    if (spec.kind == LearnerKind::Ols) {
        // Plain least squares with an intercept column; rank deficiency is
        // reported, never silently regularized.
        Eigen::MatrixXd design(n, p + 1);
        design.col(0).setOnes();
        design.rightCols(p) = X;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < p + 1)
            throw EstimationError("ols: singular design matrix (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(p + 1) +
                                  ")");
        const Eigen::VectorXd beta = qr.solve(y);
        model.intercept = beta(0);
        model.coefficients = beta.tail(p);
        return model;
    }

    // Ridge on train-standardized features, intercept unpenalized.
    const Eigen::RowVectorXd means = X.colwise().mean();
    Eigen::RowVectorXd sds(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - means(j)).square().sum() /
                           static_cast<double>(n);
        sds(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xs = (X.rowwise() - means).array().rowwise() / sds.array();
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = Xs.transpose() * Xs;
    gram.diagonal().array() += spec.ridge_lambda;
    Eigen::VectorXd beta_std;
    if (spec.ridge_lambda > 0.0) {
        beta_std = gram.ldlt().solve(Xs.transpose() * yc);
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
        qr.setThreshold(1e-10);
        if (qr.rank() < p)
            throw EstimationError("ridge(lambda=0): singular design matrix (rank " +
                                  std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
        beta_std = qr.solve(yc);
    }

    model.coefficients = (beta_std.array() / sds.transpose().array()).matrix();
    model.intercept = y_mean - model.coefficients.dot(means.transpose());
    return model;
}

// ---------------------------------------------------------------------------
// Regression trees
// ---------------------------------------------------------------------------

struct TreeWorkspace {
    std::vector<int> samples; // indices into X/y, partitioned in place
    std::vector<std::pair<double, double>> sorted; // (x value, y) per node scan
    std::vector<int> feature_pool;
};

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
  public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params,
                Rng& rng)
        : x_(X), y_(y), params_(params), rng_(rng) {
        const auto p = static_cast<std::size_t>(X.cols());
        mtry_ = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(params.feature_subsample * static_cast<double>(p))),
            1, p);
        ws_.feature_pool.resize(p);
        std::iota(ws_.feature_pool.begin(), ws_.feature_pool.end(), 0);
    }

    detail::Tree build(std::vector<int> samples) {
        ws_.samples = std::move(samples);
        tree_.nodes.clear();
        grow(0, static_cast<int>(ws_.samples.size()), 0);
        return std::move(tree_);
    }

  private:
    // Grows the node covering samples [begin, end); returns its index.
    int grow(int begin, int end, int depth) {
        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        const int count = end - begin;
        double sum = 0.0, sum2 = 0.0;
        for (int i = begin; i < end; ++i) {
            const double v = y_(ws_.samples[static_cast<std::size_t>(i)]);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / count;
        tree_.nodes[static_cast<std::size_t>(node_id)].value = mean;

        const double sse = sum2 - sum * sum / count;
        if (depth >= params_.max_depth || count < 2 * params_.min_leaf || sse <= 0.0)
            return node_id;

        const SplitChoice split = best_split(begin, end, sum);
        if (!split.found) return node_id;

        // Partition samples in place: left block takes x <= threshold.
        int mid = begin;
        for (int i = begin; i < end; ++i) {
            const int s = ws_.samples[static_cast<std::size_t>(i)];
            if (x_(s, split.feature) <= split.threshold) {
                std::swap(ws_.samples[static_cast<std::size_t>(i)],
                          ws_.samples[static_cast<std::size_t>(mid)]);
                ++mid;
            }
        }

        const int left = grow(begin, mid, depth + 1);
        const int right = grow(mid, end, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(node_id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }

    SplitChoice best_split(int begin, int end, double total_sum) {
        const int count = end - begin;

        // Partial Fisher-Yates, then sort chosen features so tie-breaking by
        // lowest feature index is independent of draw order.
        auto& pool = ws_.feature_pool;
        for (std::size_t i = 0; i < mtry_; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mtry_));

        SplitChoice best;
        auto& sorted = ws_.sorted;
        sorted.resize(static_cast<std::size_t>(count));
        for (std::size_t fi = 0; fi < mtry_; ++fi) {
            const int feature = pool[fi];
            for (int i = 0; i < count; ++i) {
                const int s = ws_.samples[static_cast<std::size_t>(begin + i)];
                sorted[static_cast<std::size_t>(i)] = {x_(s, feature), y_(s)};
            }
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_sum = 0.0;
            for (int i = 0; i + 1 < count; ++i) {
                left_sum += sorted[static_cast<std::size_t>(i)].second;
                const double xv = sorted[static_cast<std::size_t>(i)].first;
                const double xn = sorted[static_cast<std::size_t>(i + 1)].first;
                if (xv == xn) continue;
                const int n_left = i + 1;
                const int n_right = count - n_left;
                if (n_left < params_.min_leaf || n_right < params_.min_leaf) continue;
                const double right_sum = total_sum - left_sum;
                // Maximizing sum_L^2/n_L + sum_R^2/n_R minimizes pooled SSE.
                const double score =
                    left_sum * left_sum / n_left + right_sum * right_sum / n_right;
                const double threshold = xv + (xn - xv) / 2.0;
                if (score > best.score ||
                    (score == best.score &&
                     (feature < best.feature ||
                      (feature == best.feature && threshold < best.threshold)))) {
                    best.found = true;
                    best.feature = feature;
                    best.threshold = threshold;
                    best.score = score;
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& y_;
    const ForestParams& params_;
    Rng& rng_;
    std::size_t mtry_ = 1;
    TreeWorkspace ws_;
    detail::Tree tree_;
};

detail::ForestModel fit_forest(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
    const auto n = static_cast<std::size_t>(X.rows());
    detail::ForestModel model;
    model.trees.resize(static_cast<std::size_t>(spec.forest.n_trees));

    parallel_for(model.trees.size(), max_threads(), [&](std::size_t t) {
        Rng rng(mix_seed(spec.seed, t));
        std::vector<int> samples(n);
        if (spec.forest.bootstrap) {
            for (auto& s : samples) s = static_cast<int>(rng.uniform_below(n));
        } else {
            std::iota(samples.begin(), samples.end(), 0);
        }
        TreeBuilder builder(X, y, spec.forest, rng);
        model.trees[t] = builder.build(std::move(samples));
    });
    return model;
}

} // namespace

double detail::Tree::predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
    int node = 0;
    for (;;) {
        const auto& nd = nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) return nd.value;
        node = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
}

FittedModel::FittedModel(detail::LinearModel m)
    : impl_(std::move(m)), width_(std::get<detail::LinearModel>(impl_).coefficients.size()) {}

FittedModel::FittedModel(detail::ForestModel m, Eigen::Index width)
    : impl_(std::move(m)), width_(width) {}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != width_)
        throw DataError("predict: feature width " + std::to_string(X.cols()) +
                        " != training width " + std::to_string(width_));
    if (X.rows() == 0) return Eigen::VectorXd(0);

    if (const auto* linear = std::get_if<detail::LinearModel>(&impl_)) {
        return (X * linear->coefficients).array() + linear->intercept;
    }
    const auto& forest = std::get<detail::ForestModel>(impl_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& tree : forest.trees) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) += tree.predict_row(X, i);
    }
    return out / static_cast<double>(forest.trees.size());
}

FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    spec.validate();
    check_finite(X, y);
    if (spec.kind == LearnerKind::Forest) {
        return FittedModel(fit_forest(spec, X, y), X.cols());
    }
    return FittedModel(fit_linear(spec, X, y));
}

Eigen::VectorXd cross_fit(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, const FoldPlan& plan) {
    if (plan.n != static_cast<std::size_t>(X.rows()))
        throw DataError("cross_fit: fold plan covers " + std::to_string(plan.n) +
                        " samples, X has " + std::to_string(X.rows()));
    Eigen::VectorXd out(X.rows());
    for (int fold = 0; fold < plan.k; ++fold) {
        const auto train = plan.complement_indices(fold);
        const auto test = plan.fold_indices(fold);
        if (test.empty()) continue;
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), X.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(train[i]));
            ytr(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(train[i]));
        }
        Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), X.cols());
        for (std::size_t i = 0; i < test.size(); ++i)
            Xte.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(test[i]));

        Eigen::VectorXd pred;
        try {
            const FittedModel model = fit(spec, Xtr, ytr);
            pred = model.predict(Xte);
        } catch (const std::exception& e) {
            throw EstimationError("cross_fit fold " + std::to_string(fold) + ": " + e.what());
        }
        for (std::size_t i = 0; i < test.size(); ++i)
            out(static_cast<Eigen::Index>(test[i])) = pred(static_cast<Eigen::Index>(i));
    }
    return out;
}

} // namespace paneldml
