#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace paneldml {

/// One household-wave record, materialized for inspection. Missing
/// numeric values are NaN.
struct ObservationRow {
    std::string household_id;
    int year = 0;
    std::map<std::string, double> values;
};

/// Balanced-panel container: one row per household-wave, numeric columns
/// stored column-major. Immutable in use; operations return new datasets.
class PanelDataset {
  public:
    std::size_t n_rows() const { return household_ids_.size(); }
    std::size_t n_columns() const { return names_.size(); }

    const std::vector<std::string>& household_ids() const { return household_ids_; }
    const std::vector<int>& years() const { return years_; }
    const std::vector<std::string>& column_names() const { return names_; }

    bool has_column(const std::string& name) const;
    /// Throws DataError for unknown columns.
    const std::vector<double>& column(const std::string& name) const;
    /// Category labels for a column; empty for plain numeric columns.
    const std::vector<std::string>& labels(const std::string& name) const;

    /// Sorted distinct wave years.
    std::vector<int> waves() const;
    /// Sorted distinct household ids.
    std::vector<std::string> households() const;

    ObservationRow row(std::size_t i) const;

    void reserve(std::size_t n_rows);
    void add_column(const std::string& name, std::vector<std::string> labels = {});
    void append_row(std::string household_id, int year, const std::vector<double>& values);
    /// Attaches a full column to an existing dataset (e.g. a derived index).
    void set_column(const std::string& name, std::vector<double> values,
                    std::vector<std::string> labels = {});
    void drop_column(const std::string& name);

    PanelDataset select_rows(const std::vector<std::size_t>& rows) const;

  private:
    std::size_t column_index(const std::string& name) const;

    std::vector<std::string> household_ids_;
    std::vector<int> years_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<std::vector<std::string>> column_labels_;
};

/// Keeps only households observed in every wave. Idempotent; the result
/// has exactly n_households x n_waves rows.
PanelDataset enforce_balance(const PanelDataset& ds);

/// Drops entire households whose `variable` falls strictly below the
/// `fraction` quantile or strictly above the (1 - fraction) quantile in any
/// wave. Quantiles are linearly interpolated on the pooled distribution.
PanelDataset trim_tails(const PanelDataset& ds, const std::string& variable, double fraction);

/// Removes rows with age < 18, then re-enforces balance.
PanelDataset filter_adults(const PanelDataset& ds);

enum class PredicateOp { Eq, Ne, Lt, Le, Gt, Ge };

/// A field/value condition evaluated on one reference wave. The value may
/// be a category label when the field is categorical.
struct SubsetPredicate {
    std::string field;
    PredicateOp op = PredicateOp::Eq;
    std::string value;
    std::optional<int> reference_wave; // defaults to the latest wave

    /// Parses "rural=1", "asset_group=high@2019", "edu>=4".
    static SubsetPredicate parse(const std::string& text);
    std::string text() const;
};

/// Keeps every wave of the households whose reference-wave row satisfies
/// the predicate; classification is frozen at the reference wave.
PanelDataset subset(const PanelDataset& ds, const SubsetPredicate& predicate);

struct VariableSummary {
    std::string variable;
    double median, mean, sd, min, max;
};

struct SummaryTable {
    std::vector<VariableSummary> rows;
    std::string to_text() const;
};

/// Median / Mean / Standard Deviation / Min / Max per numeric column,
/// pooled over all rows. Missing values are ignored per variable.
SummaryTable summary_stats(const PanelDataset& ds);

/// Linear-interpolation quantile on unsorted values (NaN ignored).
double quantile(std::vector<double> values, double q);

/// Drops rows (or whole households when household_level) with a missing
/// value in any of the listed columns.
PanelDataset drop_missing(const PanelDataset& ds, const std::vector<std::string>& fields,
                          bool household_level);

/// Keeps only rows whose wave is in `waves_to_keep`.
PanelDataset restrict_waves(const PanelDataset& ds, const std::vector<int>& waves_to_keep);

} // namespace paneldml
