#include "paneldml/dml.hpp"

#include "paneldml/design.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace paneldml {

namespace {

constexpr double kWeakInstrumentF = 10.0;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rmse(const Eigen::VectorXd& residuals) {
    return std::sqrt(residuals.squaredNorm() / static_cast<double>(residuals.size()));
}

struct Residualized {
    Eigen::VectorXd y; // W = Y - l(X)
    Eigen::VectorXd d; // V = D - m(X)
    Eigen::VectorXd z; // Zr = Z - r(X), empty without instrument
    FoldPlan plan;
};

struct RepeatEstimate {
    double theta = 0.0;
    double se = 0.0;
    std::vector<double> fold_thetas;
    Residualized resid;
    double first_stage_f = 0.0;
    bool weak = false;
};

Eigen::MatrixXd control_matrix(const PanelDataset& ds, const DmlSpec& spec,
                               const std::vector<std::size_t>& rows) {
    const DesignBlock block = design_block(ds, rows, spec.controls);
    return block.values;
}

void require_complete(const PanelDataset& ds, const DmlSpec& spec, bool with_instrument) {
    std::vector<std::string> fields{spec.outcome, spec.treatment};
    fields.insert(fields.end(), spec.controls.begin(), spec.controls.end());
    if (with_instrument) fields.push_back(spec.instrument);
    const auto rows = complete_rows(ds, fields);
    if (rows.size() != ds.n_rows())
        throw DataError("dml: missing values in referenced fields (" +
                        std::to_string(ds.n_rows() - rows.size()) + " incomplete rows)");
}

RepeatEstimate estimate_once(const PanelDataset& ds, const DmlSpec& spec, bool with_instrument,
                             std::uint64_t fold_seed) {
    const auto n = ds.n_rows();
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;

    const Eigen::MatrixXd X = control_matrix(ds, spec, rows);
    const Eigen::VectorXd y = field_values(ds, rows, spec.outcome);
    const Eigen::VectorXd d = field_values(ds, rows, spec.treatment);

    RepeatEstimate rep;
    rep.resid.plan = kfold(n, spec.k_folds, fold_seed);
    rep.resid.y = y - cross_fit(spec.outcome_learner, X, y, rep.resid.plan);
    rep.resid.d = d - cross_fit(spec.treatment_learner, X, d, rep.resid.plan);

    const auto nd = static_cast<double>(n);
    const Eigen::VectorXd& w = rep.resid.y;
    const Eigen::VectorXd& v = rep.resid.d;

    const double vv = v.squaredNorm();
    const double d_scale = (d.array() - d.mean()).square().sum();
    if (vv <= 1e-12 * std::max(d_scale, 1.0))
        throw EstimationError("dml: treatment fully explained by controls "
                              "(degenerate treatment residual)");

    if (!with_instrument) {
        rep.theta = v.dot(w) / vv;
        const Eigen::ArrayXd score = (w - rep.theta * v).array() * v.array();
        const double psi_var = score.square().mean();
        const double jacobian = vv / nd;
        rep.se = std::sqrt(psi_var / (jacobian * jacobian) / nd);

        for (int fold = 0; fold < rep.resid.plan.k; ++fold) {
            const auto idx = rep.resid.plan.fold_indices(fold);
            double num = 0.0, den = 0.0;
            for (const std::size_t i : idx) {
                const auto e = static_cast<Eigen::Index>(i);
                num += v(e) * w(e);
                den += v(e) * v(e);
            }
            rep.fold_thetas.push_back(den > 0.0 ? num / den : 0.0);
        }
        return rep;
    }

    const Eigen::VectorXd z = field_values(ds, rows, spec.instrument);
    rep.resid.z = z - cross_fit(spec.instrument_learner, X, z, rep.resid.plan);
    const Eigen::VectorXd& zr = rep.resid.z;

    const double zv = zr.dot(v);
    if (zv == 0.0)
        throw EstimationError("dml-iv: residualized instrument orthogonal to treatment residual");
    rep.theta = zr.dot(w) / zv;
    const Eigen::ArrayXd score = (w - rep.theta * v).array() * zr.array();
    const double psi_var = score.square().mean();
    const double jacobian = zv / nd;
    rep.se = std::sqrt(psi_var / (jacobian * jacobian) / nd);

    // Residualized first-stage strength: robust F of V on Zr.
    const double zz = zr.squaredNorm();
    if (zz > 0.0) {
        const double b = zv / zz;
        const Eigen::ArrayXd u = v.array() - b * zr.array();
        const double var_b = (zr.array().square() * u.square()).sum() / (zz * zz);
        rep.first_stage_f = var_b > 0.0 ? b * b / var_b
                                        : std::numeric_limits<double>::infinity();
    }
    rep.weak = !(rep.first_stage_f >= kWeakInstrumentF);

    for (int fold = 0; fold < rep.resid.plan.k; ++fold) {
        const auto idx = rep.resid.plan.fold_indices(fold);
        double num = 0.0, den = 0.0;
        for (const std::size_t i : idx) {
            const auto e = static_cast<Eigen::Index>(i);
            num += zr(e) * w(e);
            den += zr(e) * v(e);
        }
        rep.fold_thetas.push_back(den != 0.0 ? num / den : 0.0);
    }
    return rep;
}

DmlResult run_dml(const PanelDataset& ds, const DmlSpec& spec, bool with_instrument) {
    spec.validate();
    if (with_instrument && spec.instrument.empty())
        throw ConfigError("dml-iv: instrument column required");
    if (ds.n_rows() < static_cast<std::size_t>(spec.k_folds))
        throw DataError("dml: fewer rows than folds");
    require_complete(ds, spec, with_instrument);

    std::vector<RepeatEstimate> reps;
    reps.reserve(static_cast<std::size_t>(spec.n_repeats));
    for (int r = 0; r < spec.n_repeats; ++r) {
        const std::uint64_t fold_seed = r == 0 ? spec.seed : mix_seed(spec.seed, static_cast<std::uint64_t>(r));
        reps.push_back(estimate_once(ds, spec, with_instrument, fold_seed));
    }

    DmlResult result;
    result.n_obs = ds.n_rows();

    std::vector<double> thetas;
    thetas.reserve(reps.size());
    for (const auto& rep : reps) thetas.push_back(rep.theta);
    result.repeat_thetas = thetas;
    result.theta = median(thetas);

    if (reps.size() == 1) {
        result.std_error = reps[0].se;
    } else {
        // Median-of-repeats aggregation: each repeat's variance is widened
        // by its squared distance from the median point estimate.
        std::vector<double> adjusted;
        adjusted.reserve(reps.size());
        for (const auto& rep : reps) {
            const double delta = rep.theta - result.theta;
            adjusted.push_back(std::sqrt(rep.se * rep.se + delta * delta));
        }
        result.std_error = median(adjusted);
    }
    result.t_stat = result.std_error > 0.0 ? result.theta / result.std_error : 0.0;

    const auto& first = reps.front();
    result.fold_thetas = first.fold_thetas;
    result.outcome_rmse = rmse(first.resid.y);
    result.treatment_rmse = rmse(first.resid.d);
    if (with_instrument) {
        result.instrument_rmse = rmse(first.resid.z);
        result.first_stage_f = first.first_stage_f;
        result.weak_instrument = first.weak;
    }
    return result;
}

} // namespace

void DmlSpec::validate() const {
    if (outcome.empty() || treatment.empty())
        throw ConfigError("dml: outcome and treatment fields required");
    if (k_folds < 2) throw ConfigError("dml: k_folds must be >= 2");
    if (n_repeats < 1) throw ConfigError("dml: n_repeats must be >= 1");
    outcome_learner.validate();
    treatment_learner.validate();
    if (!instrument.empty()) instrument_learner.validate();
}

DmlSpec DmlSpec::with_seed(std::uint64_t s) const {
    DmlSpec out = *this;
    out.seed = s;
    out.outcome_learner.seed = mix_seed(s, 101);
    out.treatment_learner.seed = mix_seed(s, 102);
    out.instrument_learner.seed = mix_seed(s, 103);
    return out;
}

EstimateResult DmlResult::to_estimate_result(const std::string& treatment_name) const {
    EstimateResult r;
    r.n_obs = n_obs;
    Coefficient c;
    c.name = treatment_name;
    c.estimate = theta;
    c.std_error = std_error;
    c.t_stat = t_stat;
    r.coefficients.push_back(std::move(c));
    r.diagnostics["outcome_rmse"] = outcome_rmse;
    r.diagnostics["treatment_rmse"] = treatment_rmse;
    for (std::size_t f = 0; f < fold_thetas.size(); ++f)
        r.diagnostics["fold_theta_" + std::to_string(f)] = fold_thetas[f];
    if (!std::isnan(first_stage_f) && first_stage_f != 0.0)
        r.diagnostics["first_stage_f"] = first_stage_f;
    if (weak_instrument) r.diagnostics["weak_instrument"] = 1.0;
    if (instrument_rmse != 0.0) r.diagnostics["instrument_rmse"] = instrument_rmse;
    return r;
}

DmlResult dml_plm(const PanelDataset& ds, const DmlSpec& spec) {
    return run_dml(ds, spec, false);
}

DmlResult dml_plm_iv(const PanelDataset& ds, const DmlSpec& spec) {
    return run_dml(ds, spec, true);
}

DmlResult per_year_dml(const PanelDataset& ds, const DmlSpec& spec, int year) {
    const auto waves = ds.waves();
    if (std::find(waves.begin(), waves.end(), year) == waves.end())
        throw DataError("per_year_dml: wave " + std::to_string(year) + " not in dataset");

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (ds.years()[i] == year) rows.push_back(i);
    }
    PanelDataset cross_section = ds.select_rows(rows);

    DmlSpec year_spec = spec;
    if (cross_section.has_column("province_id")) {
        // Province dummies join the controls, first province dropped.
        const auto& prov = cross_section.column("province_id");
        std::set<double> provinces(prov.begin(), prov.end());
        bool first = true;
        for (const double p : provinces) {
            if (first) {
                first = false;
                continue;
            }
            std::vector<double> dummy(cross_section.n_rows());
            for (std::size_t i = 0; i < dummy.size(); ++i) dummy[i] = prov[i] == p ? 1.0 : 0.0;
            const std::string name =
                "province_id_" + std::to_string(static_cast<long long>(p));
            cross_section.set_column(name, std::move(dummy));
            year_spec.controls.push_back(name);
        }
    }
    return spec.instrument.empty() ? dml_plm(cross_section, year_spec)
                                   : dml_plm_iv(cross_section, year_spec);
}

} // namespace paneldml
