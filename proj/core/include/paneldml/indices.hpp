#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace paneldml {

/// Annualized return/risk inputs for the portfolio classes. The risk-free
/// class enters expected return at `risk_free_rate` and contributes no
/// variance; `covariance` spans the risky classes only.
struct AssetClassParams {
    double risk_free_rate = 0.0;
    std::vector<std::string> class_names; // risky classes, e.g. {bond, stock}
    Eigen::VectorXd expected_returns;     // per risky class, annual fraction
    Eigen::MatrixXd covariance;           // risky x risky, fraction^2

    /// Symmetry and positive semi-definiteness; throws DataError.
    void validate() const;

    /// Builds the covariance from per-class sds and a correlation matrix.
    static AssetClassParams from_moments(double risk_free_rate,
                                         std::vector<std::string> class_names,
                                         const std::vector<double>& returns,
                                         const std::vector<double>& sds,
                                         const Eigen::MatrixXd& correlation);
    static AssetClassParams from_json_file(const std::string& path);
};

/// Portfolio shares of total financial assets; risk-free plus one weight
/// per risky class, summing to 1 within 1e-9.
struct PortfolioWeights {
    double risk_free = 0.0;
    std::vector<double> risky;

    void validate() const;
    std::size_t n_classes_held() const;
};

/// Shares from currency amounts; total must be positive.
PortfolioWeights weights_from_amounts(double risk_free_amount,
                                      const std::vector<double>& risky_amounts);

/// 1 iff the household holds a strictly positive amount of risky assets.
int fmp_flag(double risky_asset_total);

/// risky / total, requires 0 <= risky <= total and total > 0.
double risky_ratio(double risky_total, double total_assets);

/// Portfolio Sharpe ratio: (E[R_p] - R_f) / sd(R_p) where E[R_p] mixes the
/// risk-free rate and the risky expected returns by weight and the variance
/// is the quadratic form of the risky weights in the covariance. Returns
/// nullopt for zero-variance portfolios.
std::optional<double> sharpe_ratio(const PortfolioWeights& weights,
                                   const AssetClassParams& params);

/// The four financial-inclusion service flags.
struct InclusionFlags {
    int credit_card = 0;
    int digital_payment = 0;
    int bank_account = 0;
    int insurance = 0;

    void validate() const;
    std::array<int, 4> as_array() const { return {credit_card, digital_payment, bank_account, insurance}; }
};

/// Simple average of the four flags; one of {0, 0.25, 0.5, 0.75, 1}.
double fa_index(const InclusionFlags& flags);

/// Entropy weights over indicator columns:
///   p_ij = x_ij / sum_i x_ij
///   e_j  = -(1/ln n) sum_i p_ij ln p_ij   (0 ln 0 = 0)
///   d_j  = 1 - e_j,  w_j = d_j / sum d_j
/// Columns with no variation (all equal, including all-zero) get d_j = 0.
/// Throws EstimationError when every column is constant.
std::vector<double> entropy_weights(const Eigen::MatrixXd& indicators);

/// Weighted combination of the four flags with entropy (or other) weights.
double fa_score(const InclusionFlags& flags, const std::vector<double>& weights);

} // namespace paneldml
