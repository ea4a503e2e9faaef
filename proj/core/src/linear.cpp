#include "paneldml/linear.hpp"

#include "paneldml/design.hpp"
#include "paneldml/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace paneldml {

namespace {

constexpr double kWeakInstrumentF = 10.0;

std::vector<std::string> referenced_fields(const RegressionSpec& spec, bool with_instruments) {
    std::vector<std::string> fields{spec.outcome};
    fields.insert(fields.end(), spec.treatments.begin(), spec.treatments.end());
    fields.insert(fields.end(), spec.controls.begin(), spec.controls.end());
    fields.insert(fields.end(), spec.fixed_effects.begin(), spec.fixed_effects.end());
    if (with_instruments)
        fields.insert(fields.end(), spec.instruments.begin(), spec.instruments.end());
    return fields;
}

struct Design {
    Eigen::MatrixXd X; // intercept first
    std::vector<std::string> names;
    Eigen::VectorXd y;
    std::vector<std::size_t> rows;
};

Design build_design(const PanelDataset& ds, const RegressionSpec& spec, bool with_instruments) {
    const auto rows = complete_rows(ds, referenced_fields(spec, with_instruments));
    if (rows.size() < 2) throw DataError("regression: fewer than 2 complete rows");

    const DesignBlock treat = design_block(ds, rows, spec.treatments);
    const DesignBlock ctrl = design_block(ds, rows, spec.controls);
    const DesignBlock fe = fixed_effect_dummies(ds, rows, spec.fixed_effects);
    const DesignBlock joined = hcat({treat, ctrl, fe});

    Design d;
    d.rows = rows;
    d.y = field_values(ds, rows, spec.outcome);
    d.X.resize(static_cast<Eigen::Index>(rows.size()), joined.cols() + 1);
    d.X.col(0).setOnes();
    if (joined.cols() > 0) d.X.rightCols(joined.cols()) = joined.values;
    d.names.push_back("(Intercept)");
    d.names.insert(d.names.end(), joined.names.begin(), joined.names.end());
    return d;
}

/// Names the dependent columns and, for each, the accepted columns that
/// reproduce it, so duplicated regressors are reported as a pair.
std::string collinearity_message(const Eigen::MatrixXd& X, const std::vector<std::string>& names,
                                 const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
    const Eigen::Index rank = qr.rank();
    const auto perm = qr.colsPermutation().indices();
    std::vector<Eigen::Index> accepted, rejected;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        (i < rank ? accepted : rejected).push_back(perm(i));

    Eigen::MatrixXd Xa(X.rows(), static_cast<Eigen::Index>(accepted.size()));
    for (std::size_t c = 0; c < accepted.size(); ++c) Xa.col(static_cast<Eigen::Index>(c)) = X.col(accepted[c]);

    std::ostringstream msg;
    msg << "rank-deficient design: ";
    for (std::size_t r = 0; r < rejected.size(); ++r) {
        if (r > 0) msg << "; ";
        const Eigen::VectorXd target = X.col(rejected[r]);
        const Eigen::VectorXd beta = Xa.colPivHouseholderQr().solve(target);
        msg << "column '" << names[static_cast<std::size_t>(rejected[r])]
            << "' is collinear with";
        bool any = false;
        for (std::size_t c = 0; c < accepted.size(); ++c) {
            if (std::abs(beta(static_cast<Eigen::Index>(c))) > 1e-6) {
                msg << (any ? ", " : " ") << "'" << names[static_cast<std::size_t>(accepted[c])]
                    << "'";
                any = true;
            }
        }
        if (!any) msg << " the remaining columns";
    }
    return msg.str();
}

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd xtx_inverse;
};

OlsFit solve_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-8);
    if (qr.rank() < X.cols()) throw EstimationError(collinearity_message(X, names, qr));
    OlsFit fit;
    fit.beta = qr.solve(y);
    fit.residuals = y - X * fit.beta;
    const Eigen::MatrixXd xtx = X.transpose() * X;
    fit.xtx_inverse = xtx.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    return fit;
}

/// Classical or HC1 covariance of OLS coefficients.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                           const Eigen::MatrixXd& xtx_inverse, SeType se_type) {
    const auto n = static_cast<double>(X.rows());
    const auto k = static_cast<double>(X.cols());
    if (se_type == SeType::Classical) {
        const double sigma2 = residuals.squaredNorm() / (n - k);
        return sigma2 * xtx_inverse;
    }
    // HC1: (X'X)^-1 X' diag(e^2) X (X'X)^-1 * n/(n-k)
    const Eigen::MatrixXd meat =
        X.transpose() * residuals.array().square().matrix().asDiagonal() * X;
    return (n / (n - k)) * xtx_inverse * meat * xtx_inverse;
}

EstimateResult package(const std::vector<std::string>& names, const Eigen::VectorXd& beta,
                       const Eigen::MatrixXd& cov, std::size_t n_obs) {
    EstimateResult result;
    result.n_obs = n_obs;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        Coefficient c;
        c.name = names[static_cast<std::size_t>(j)];
        c.estimate = beta(j);
        const double var = cov(j, j);
        c.std_error = var > 0.0 ? std::sqrt(var) : 0.0;
        c.t_stat = c.std_error > 0.0 ? c.estimate / c.std_error : 0.0;
        result.coefficients.push_back(std::move(c));
    }
    return result;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& residuals) {
    const double tss = (y.array() - y.mean()).square().sum();
    if (tss <= 0.0) return 0.0;
    return 1.0 - residuals.squaredNorm() / tss;
}

} // namespace

void RegressionSpec::validate() const {
    if (outcome.empty()) throw ConfigError("regression: outcome field required");
    std::set<std::string> seen{outcome};
    const auto check = [&](const std::vector<std::string>& fields, const char* role) {
        for (const auto& f : fields) {
            if (!seen.insert(f).second)
                throw ConfigError(std::string("regression: field '") + f +
                                  "' appears in two roles (" + role + ")");
        }
    };
    check(treatments, "treatments");
    check(controls, "controls");
    check(fixed_effects, "fixed effects");
    check(instruments, "instruments");
    if (!instruments.empty() && treatments.size() != 1)
        throw ConfigError("regression: instruments require exactly one endogenous treatment");
}

EstimateResult fe_ols(const PanelDataset& ds, const RegressionSpec& spec) {
    spec.validate();
    const Design d = build_design(ds, spec, false);
    const OlsFit fit = solve_ols(d.X, d.y, d.names);
    const Eigen::MatrixXd cov = covariance(d.X, fit.residuals, fit.xtx_inverse, spec.se_type);
    EstimateResult result = package(d.names, fit.beta, cov, d.rows.size());
    result.diagnostics["r2"] = r_squared(d.y, fit.residuals);
    return result;
}

EstimateResult lpm(const PanelDataset& ds, const RegressionSpec& spec) {
    spec.validate();
    const auto rows = complete_rows(ds, referenced_fields(spec, false));
    const auto y = field_values(ds, rows, spec.outcome);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0)
            throw DataError("lpm: outcome '" + spec.outcome + "' is not binary");
    }
    return fe_ols(ds, spec);
}

EstimateResult tsls(const PanelDataset& ds, const RegressionSpec& spec) {
    spec.validate();
    if (spec.instruments.empty()) throw ConfigError("tsls: at least one instrument required");
    if (!ds.labels(spec.treatments.at(0)).empty())
        throw ConfigError("tsls: categorical treatment not supported");
    const Design d = build_design(ds, spec, true);
    const auto n_rows = d.rows.size();

    // The treatment occupies design column 1 (after the intercept).
    const Eigen::VectorXd treatment = d.X.col(1);
    Eigen::MatrixXd exog(d.X.rows(), d.X.cols() - 1);
    exog.col(0) = d.X.col(0);
    if (d.X.cols() > 2) exog.rightCols(d.X.cols() - 2) = d.X.rightCols(d.X.cols() - 2);
    std::vector<std::string> exog_names{d.names[0]};
    exog_names.insert(exog_names.end(), d.names.begin() + 2, d.names.end());

    const DesignBlock z = design_block(ds, d.rows, spec.instruments);
    Eigen::MatrixXd first_stage(d.X.rows(), exog.cols() + z.cols());
    first_stage.leftCols(z.cols()) = z.values;
    first_stage.rightCols(exog.cols()) = exog;
    std::vector<std::string> fs_names = z.names;
    fs_names.insert(fs_names.end(), exog_names.begin(), exog_names.end());

    OlsFit fs;
    try {
        fs = solve_ols(first_stage, treatment, fs_names);
    } catch (const EstimationError& e) {
        throw EstimationError(std::string("tsls first stage: ") + e.what());
    }
    const Eigen::VectorXd fitted_treatment = treatment - fs.residuals;

    // First-stage F for the excluded instruments.
    OlsFit fs_restricted = solve_ols(exog, treatment, exog_names);
    const double rss_u = fs.residuals.squaredNorm();
    const double rss_r = fs_restricted.residuals.squaredNorm();
    const auto q = static_cast<double>(z.cols());
    const auto df = static_cast<double>(first_stage.rows() - first_stage.cols());
    const double first_stage_f = rss_u > 0.0 ? ((rss_r - rss_u) / q) / (rss_u / df)
                                             : std::numeric_limits<double>::infinity();

    Eigen::MatrixXd second = d.X;
    second.col(1) = fitted_treatment;
    const OlsFit ss = solve_ols(second, d.y, d.names);

    // Residuals evaluated at the original treatment, not the fitted one.
    const Eigen::VectorXd structural_residuals = d.y - d.X * ss.beta;
    const Eigen::MatrixXd cov =
        covariance(second, structural_residuals, ss.xtx_inverse, spec.se_type);

    EstimateResult result = package(d.names, ss.beta, cov, n_rows);
    result.diagnostics["first_stage_f"] = first_stage_f;
    if (!(first_stage_f >= kWeakInstrumentF)) result.diagnostics["weak_instrument"] = 1.0;
    return result;
}

PanelDataset city_average_instrument(const PanelDataset& ds, const std::string& group_field,
                                     const std::string& target_field,
                                     const std::string& output_field) {
    const auto& group = ds.column(group_field);
    const auto& target = ds.column(target_field);
    const std::string out_name =
        output_field.empty() ? target_field + "_group_avg" : output_field;

    // Group key: (group value, wave).
    std::map<std::pair<double, int>, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (std::isnan(group[i]) || std::isnan(target[i])) continue;
        auto& [sum, count] = sums[{group[i], ds.years()[i]}];
        sum += target[i];
        ++count;
    }

    std::vector<double> loo(ds.n_rows(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (std::isnan(group[i]) || std::isnan(target[i])) continue;
        const auto& [sum, count] = sums.at({group[i], ds.years()[i]});
        if (count < 2) continue; // singleton: leave-one-out undefined
        loo[i] = (sum - target[i]) / static_cast<double>(count - 1);
    }

    PanelDataset out = ds;
    out.set_column(out_name, std::move(loo));
    return out;
}

} // namespace paneldml
