#include "paneldml/ddml.hpp"

#include "paneldml/errors.hpp"
#include "paneldml/parallel.hpp"
#include "paneldml/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace paneldml {

void DynamicDGPParams::validate() const {
    const Eigen::Index p = a.size();
    if (p < 1) throw DataError("dynamic dgp: state dimension must be >= 1");
    if (b.rows() != p || b.cols() != p)
        throw DataError("dynamic dgp: state transition must be " + std::to_string(p) + "x" +
                        std::to_string(p));
    if (c.size() != p || d.size() != p || sigma.size() != p || f.size() != p)
        throw DataError("dynamic dgp: parameter vector length mismatch");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw DataError("dynamic dgp: treatment persistence must lie in [0, 1)");
    if (n_periods < 2) throw DataError("dynamic dgp: need at least 2 periods");
    if (state_noise_sd < 0.0 || treatment_noise_sd < 0.0 || outcome_noise_sd < 0.0)
        throw DataError("dynamic dgp: negative noise sd");

    const Eigen::EigenSolver<Eigen::MatrixXd> eig(b);
    const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(radius < 1.0))
        throw DataError("dynamic dgp: state transition spectral radius " +
                        std::to_string(radius) + " >= 1");
}

bool DynamicDGPParams::linear_homogeneous() const {
    return c.isZero(0.0) && sigma.isZero(0.0);
}

PanelDataset simulate_dynamic_panel(const DynamicDGPParams& params, std::size_t n_households,
                                    std::uint64_t seed) {
    params.validate();
    const auto p = params.state_dim();
    const int m = params.n_periods;

    PanelDataset ds;
    for (Eigen::Index j = 0; j < p; ++j) ds.add_column("x" + std::to_string(j + 1));
    ds.add_column("d");
    ds.add_column("y");
    ds.reserve(n_households * static_cast<std::size_t>(m));

    // Trajectories are generated into a flat buffer indexed by household so
    // the draw order per household is fixed regardless of threading.
    const auto row_width = static_cast<std::size_t>(p) + 2;
    std::vector<double> buffer(n_households * static_cast<std::size_t>(m) * row_width);

    parallel_for(n_households, max_threads(), [&](std::size_t h) {
        Rng rng(mix_seed(seed, h));
        Eigen::VectorXd x(p);
        for (Eigen::Index j = 0; j < p; ++j) x(j) = rng.normal();
        double treat = (1.0 - params.alpha) * params.d.dot(x) +
                       params.treatment_noise_sd * rng.normal();

        std::vector<Eigen::VectorXd> states(static_cast<std::size_t>(m));
        std::vector<double> treatments(static_cast<std::size_t>(m));
        states[0] = x;
        treatments[0] = treat;
        for (int t = 1; t < m; ++t) {
            Eigen::VectorXd noise(p);
            for (Eigen::Index j = 0; j < p; ++j)
                noise(j) = params.state_noise_sd * rng.normal();
            const Eigen::VectorXd x_next =
                (params.a + params.c.cwiseProduct(x)) * treat + params.b * x + noise;
            treat = params.alpha * treat + (1.0 - params.alpha) * params.d.dot(x_next) +
                    params.treatment_noise_sd * rng.normal();
            x = x_next;
            states[static_cast<std::size_t>(t)] = x;
            treatments[static_cast<std::size_t>(t)] = treat;
        }
        const double outcome = (params.sigma.dot(x) + 1.0) * params.e * treat +
                               params.f.dot(x) + params.outcome_noise_sd * rng.normal();

        for (int t = 0; t < m; ++t) {
            double* row = buffer.data() +
                          (h * static_cast<std::size_t>(m) + static_cast<std::size_t>(t)) *
                              row_width;
            for (Eigen::Index j = 0; j < p; ++j)
                row[static_cast<std::size_t>(j)] = states[static_cast<std::size_t>(t)](j);
            row[static_cast<std::size_t>(p)] = treatments[static_cast<std::size_t>(t)];
            row[static_cast<std::size_t>(p) + 1] = outcome;
        }
    });

    std::vector<double> row(row_width);
    for (std::size_t h = 0; h < n_households; ++h) {
        const std::string id = "h" + std::to_string(h + 1);
        for (int t = 0; t < m; ++t) {
            const double* src = buffer.data() +
                                (h * static_cast<std::size_t>(m) + static_cast<std::size_t>(t)) *
                                    row_width;
            std::copy(src, src + row_width, row.begin());
            ds.append_row(id, t + 1, row);
        }
    }
    return ds;
}

DynamicEffects true_effects(const DynamicDGPParams& params) {
    params.validate();
    if (!params.linear_homogeneous())
        throw DataError("true_effects: requires c = 0 and sigma = 0");

    const int m = params.n_periods;
    DynamicEffects effects;
    effects.n_obs = 0;
    effects.periods.resize(static_cast<std::size_t>(m));
    effects.psi.resize(static_cast<std::size_t>(m));
    effects.se.assign(static_cast<std::size_t>(m), 0.0);

    for (int t = 1; t <= m; ++t) {
        effects.periods[static_cast<std::size_t>(t - 1)] = t;
        double s = 1.0; // dD_q / dD_t
        Eigen::VectorXd u = Eigen::VectorXd::Zero(params.state_dim()); // dX_q / dD_t
        for (int q = t; q < m; ++q) {
            u = params.a * s + params.b * u;
            s = params.alpha * s + (1.0 - params.alpha) * params.d.dot(u);
        }
        effects.psi[static_cast<std::size_t>(t - 1)] = params.e * s + params.f.dot(u);
    }
    return effects;
}

void DdmlSpec::validate() const {
    if (outcome.empty() || treatment.empty())
        throw ConfigError("ddml: outcome and treatment fields required");
    if (k_folds < 2) throw ConfigError("ddml: k_folds must be >= 2");
    outcome_learner.validate();
    treatment_learner.validate();
}

DynamicEffects ddml_estimate(const PanelDataset& ds, const DdmlSpec& spec) {
    spec.validate();
    const auto waves = ds.waves();
    if (waves.empty()) throw DataError("ddml: dataset has no waves");
    const auto m = waves.size();

    // Balance check and per-household row lookup.
    const auto households = ds.households();
    const auto n = households.size();
    if (n * m != ds.n_rows())
        throw DataError("ddml: unbalanced panel (" + std::to_string(ds.n_rows()) + " rows, " +
                        std::to_string(n) + " households x " + std::to_string(m) + " waves)");
    std::unordered_map<std::string, std::size_t> household_index;
    household_index.reserve(n);
    for (std::size_t h = 0; h < n; ++h) household_index[households[h]] = h;
    std::map<int, std::size_t> wave_index;
    for (std::size_t t = 0; t < m; ++t) wave_index[waves[t]] = t;

    // row_of[h*m + t] = dataset row of household h in wave t.
    std::vector<std::size_t> row_of(n * m, ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const std::size_t h = household_index.at(ds.household_ids()[i]);
        const std::size_t t = wave_index.at(ds.years()[i]);
        if (row_of[h * m + t] != ds.n_rows())
            throw DataError("ddml: household " + ds.household_ids()[i] +
                            " duplicated in wave " + std::to_string(ds.years()[i]));
        row_of[h * m + t] = i;
    }

    const auto& treat_col = ds.column(spec.treatment);
    const auto& outcome_col = ds.column(spec.outcome);
    for (const auto& ctrl : spec.controls) ds.column(ctrl); // existence check

    // Terminal outcome per household.
    std::vector<double> terminal_outcome(n);
    for (std::size_t h = 0; h < n; ++h)
        terminal_outcome[h] = outcome_col[row_of[h * m + (m - 1)]];

    DynamicEffects effects;
    effects.n_obs = n;
    effects.periods = waves;
    effects.psi.assign(m, 0.0);
    effects.se.assign(m, 0.0);

    std::vector<double> adjusted = terminal_outcome;
    for (std::size_t stage = m; stage >= 1; --stage) {
        const std::size_t t = stage - 1; // 0-based wave index

        // Stage cross-section: one row per household.
        std::vector<std::pair<std::string, std::vector<double>>> stage_columns;
        std::vector<std::string> stage_controls;
        const auto gather = [&](const std::string& source, std::size_t wave,
                                const std::string& name) {
            const auto& col = ds.column(source);
            std::vector<double> values(n);
            for (std::size_t h = 0; h < n; ++h) values[h] = col[row_of[h * m + wave]];
            stage_columns.emplace_back(name, std::move(values));
            return name;
        };

        if (spec.full_history) {
            for (std::size_t q = 0; q <= t; ++q) {
                for (const auto& ctrl : spec.controls)
                    stage_controls.push_back(
                        gather(ctrl, q, ctrl + "_w" + std::to_string(q + 1)));
            }
            for (std::size_t q = 0; q < t; ++q)
                stage_controls.push_back(
                    gather(spec.treatment, q, spec.treatment + "_lag_w" + std::to_string(q + 1)));
        } else {
            for (const auto& ctrl : spec.controls) stage_controls.push_back(gather(ctrl, t, ctrl));
            if (t > 0)
                stage_controls.push_back(gather(spec.treatment, t - 1, spec.treatment + "_lag"));
        }

        std::vector<double> stage_treatment(n);
        for (std::size_t h = 0; h < n; ++h) stage_treatment[h] = treat_col[row_of[h * m + t]];
        stage_columns.emplace_back("treatment", stage_treatment);
        stage_columns.emplace_back("outcome", adjusted);

        PanelDataset cross;
        for (const auto& col : stage_columns) cross.add_column(col.first);
        std::vector<double> row_values(stage_columns.size());
        for (std::size_t h = 0; h < n; ++h) {
            for (std::size_t cidx = 0; cidx < stage_columns.size(); ++cidx)
                row_values[cidx] = stage_columns[cidx].second[h];
            cross.append_row(households[h], waves[t], row_values);
        }

        DmlSpec stage_spec;
        stage_spec.outcome = "outcome";
        stage_spec.treatment = "treatment";
        stage_spec.controls = stage_controls;
        stage_spec.outcome_learner = spec.outcome_learner;
        stage_spec.treatment_learner = spec.treatment_learner;
        stage_spec.k_folds = spec.k_folds;
        stage_spec.seed = spec.seed + static_cast<std::uint64_t>(m - stage);

        DmlResult stage_result;
        try {
            stage_result = dml_plm(cross, stage_spec);
        } catch (const std::exception& e) {
            throw EstimationError("ddml stage " + std::to_string(stage) + " (wave " +
                                  std::to_string(waves[t]) + "): " + e.what());
        }
        effects.psi[t] = stage_result.theta;
        effects.se[t] = stage_result.std_error;

        // Blip down: remove this stage's contribution before recursing.
        for (std::size_t h = 0; h < n; ++h)
            adjusted[h] -= stage_result.theta * stage_treatment[h];

        if (stage == 1) break;
    }
    return effects;
}

} // namespace paneldml
