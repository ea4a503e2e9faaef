#include "paneldml/indices.hpp"

#include "paneldml/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace paneldml {

void AssetClassParams::validate() const {
    const auto n = static_cast<Eigen::Index>(class_names.size());
    if (expected_returns.size() != n)
        throw DataError("asset params: expected_returns size mismatch");
    if (covariance.rows() != n || covariance.cols() != n)
        throw DataError("asset params: covariance must be " + std::to_string(n) + "x" +
                        std::to_string(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(covariance(i, j) - covariance(j, i)) > 1e-12)
                throw DataError("asset params: covariance not symmetric");
        }
        if (covariance(i, i) < 0.0)
            throw DataError("asset params: negative variance for class " + class_names[i]);
    }
    if (n > 0) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
        if (eig.eigenvalues().minCoeff() < -1e-10)
            throw DataError("asset params: covariance not positive semi-definite");
    }
}

AssetClassParams AssetClassParams::from_moments(double risk_free_rate,
                                                std::vector<std::string> class_names,
                                                const std::vector<double>& returns,
                                                const std::vector<double>& sds,
                                                const Eigen::MatrixXd& correlation) {
    AssetClassParams p;
    p.risk_free_rate = risk_free_rate;
    p.class_names = std::move(class_names);
    const auto n = static_cast<Eigen::Index>(p.class_names.size());
    if (static_cast<Eigen::Index>(returns.size()) != n ||
        static_cast<Eigen::Index>(sds.size()) != n)
        throw DataError("asset params: returns/sds size mismatch");
    p.expected_returns = Eigen::Map<const Eigen::VectorXd>(returns.data(), n);
    if (correlation.rows() != n || correlation.cols() != n)
        throw DataError("asset params: correlation must be " + std::to_string(n) + "x" +
                        std::to_string(n));
    p.covariance.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            p.covariance(i, j) = correlation(i, j) * sds[static_cast<std::size_t>(i)] *
                                 sds[static_cast<std::size_t>(j)];
    }
    p.validate();
    return p;
}

AssetClassParams AssetClassParams::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open asset params file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("asset params " + path + ": " + e.what());
    }
    try {
        std::vector<std::string> names;
        std::vector<double> returns, sds;
        for (const auto& cls : doc.at("classes")) {
            names.push_back(cls.at("name").get<std::string>());
            returns.push_back(cls.at("annual_return").get<double>());
            sds.push_back(cls.at("annual_sd").get<double>());
        }
        const auto n = static_cast<Eigen::Index>(names.size());
        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
        if (doc.contains("correlation")) {
            const auto& rows = doc.at("correlation");
            if (static_cast<Eigen::Index>(rows.size()) != n)
                throw ConfigError("asset params: correlation row count mismatch");
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j)
                    corr(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                     .get<double>();
            }
        }
        return from_moments(doc.at("risk_free_rate").get<double>(), std::move(names), returns,
                            sds, corr);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("asset params " + path + ": " + e.what());
    }
}

void PortfolioWeights::validate() const {
    double sum = risk_free;
    if (risk_free < 0.0 || risk_free > 1.0)
        throw DataError("portfolio weights: risk-free weight outside [0,1]");
    for (const double w : risky) {
        if (w < 0.0 || w > 1.0) throw DataError("portfolio weights: weight outside [0,1]");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DataError("portfolio weights: sum " + std::to_string(sum) + " != 1");
}

std::size_t PortfolioWeights::n_classes_held() const {
    std::size_t n = risk_free > 0.0 ? 1 : 0;
    for (const double w : risky) {
        if (w > 0.0) ++n;
    }
    return n;
}

PortfolioWeights weights_from_amounts(double risk_free_amount,
                                      const std::vector<double>& risky_amounts) {
    double total = risk_free_amount;
    for (const double a : risky_amounts) {
        if (a < 0.0) throw DataError("negative asset amount");
        total += a;
    }
    if (risk_free_amount < 0.0) throw DataError("negative asset amount");
    if (total <= 0.0) throw DataError("total financial assets must be positive");
    PortfolioWeights w;
    w.risk_free = risk_free_amount / total;
    w.risky.reserve(risky_amounts.size());
    for (const double a : risky_amounts) w.risky.push_back(a / total);
    return w;
}

int fmp_flag(double risky_asset_total) {
    if (risky_asset_total < 0.0) throw DataError("fmp_flag: negative risky asset amount");
    return risky_asset_total > 0.0 ? 1 : 0;
}

double risky_ratio(double risky_total, double total_assets) {
    if (total_assets <= 0.0) throw DataError("risky_ratio: total assets must be positive");
    if (risky_total < 0.0) throw DataError("risky_ratio: negative risky amount");
    if (risky_total > total_assets)
        throw DataError("risky_ratio: risky assets exceed total assets");
    return risky_total / total_assets;
}

std::optional<double> sharpe_ratio(const PortfolioWeights& weights,
                                   const AssetClassParams& params) {
    weights.validate();
    params.validate();
    if (weights.risky.size() != params.class_names.size())
        throw DataError("sharpe_ratio: weights cover " + std::to_string(weights.risky.size()) +
                        " risky classes, params define " +
                        std::to_string(params.class_names.size()));

    const auto n = static_cast<Eigen::Index>(weights.risky.size());
    const Eigen::Map<const Eigen::VectorXd> w(weights.risky.data(), n);

    const double expected = weights.risk_free * params.risk_free_rate +
                            w.dot(params.expected_returns);
    const double variance = w.dot(params.covariance * w);
    const double sd = std::sqrt(std::max(variance, 0.0));
    if (sd == 0.0) return std::nullopt;
    return (expected - params.risk_free_rate) / sd;
}

void InclusionFlags::validate() const {
    for (const int f : as_array()) {
        if (f != 0 && f != 1) throw DataError("inclusion flags must be 0 or 1");
    }
}

double fa_index(const InclusionFlags& flags) {
    flags.validate();
    const auto a = flags.as_array();
    return (a[0] + a[1] + a[2] + a[3]) / 4.0;
}

std::vector<double> entropy_weights(const Eigen::MatrixXd& indicators) {
    const Eigen::Index n = indicators.rows();
    const Eigen::Index j_count = indicators.cols();
    if (n < 2) throw DataError("entropy_weights: need at least 2 rows");
    if (j_count < 1) throw DataError("entropy_weights: need at least 1 column");
    if ((indicators.array() < 0.0).any())
        throw DataError("entropy_weights: negative indicator value");

    const double log_n = std::log(static_cast<double>(n));
    std::vector<double> divergence(static_cast<std::size_t>(j_count), 0.0);
    double divergence_sum = 0.0;
    for (Eigen::Index j = 0; j < j_count; ++j) {
        const double col_sum = indicators.col(j).sum();
        double entropy = 0.0;
        if (col_sum > 0.0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = indicators(i, j) / col_sum;
                if (p > 0.0) entropy += p * std::log(p);
            }
            entropy = -entropy / log_n;
        } else {
            entropy = 1.0; // all-zero column carries no information
        }
        double d = 1.0 - entropy;
        if (d < 1e-12) d = 0.0; // constant column up to rounding
        divergence[static_cast<std::size_t>(j)] = d;
        divergence_sum += d;
    }
    if (divergence_sum <= 0.0)
        throw EstimationError("entropy weights undefined: every indicator is constant");

    std::vector<double> weights(static_cast<std::size_t>(j_count));
    for (std::size_t j = 0; j < weights.size(); ++j) weights[j] = divergence[j] / divergence_sum;
    return weights;
}

double fa_score(const InclusionFlags& flags, const std::vector<double>& weights) {
    flags.validate();
    if (weights.size() != 4)
        throw DataError("fa_score: expected 4 weights, got " + std::to_string(weights.size()));
    const auto a = flags.as_array();
    double score = 0.0;
    for (std::size_t j = 0; j < 4; ++j) score += weights[j] * a[j];
    return score;
}

} // namespace paneldml
