#pragma once

#include "paneldml/panel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace paneldml {

/// A numeric design block extracted from a dataset: one column per term,
/// categorical fields expanded into level dummies (first level dropped),
/// fixed-effect fields expanded into per-value dummies (first value
/// dropped). "year" resolves to the wave attribute when no column of that
/// name exists.
struct DesignBlock {
    Eigen::MatrixXd values;
    std::vector<std::string> names;

    Eigen::Index cols() const { return values.cols(); }
};

/// Rows (by index) with finite values in all listed fields.
std::vector<std::size_t> complete_rows(const PanelDataset& ds,
                                       const std::vector<std::string>& fields);

/// Extracts `fields` for the given rows. Categorical columns expand into
/// `field_label` dummies; plain columns pass through.
DesignBlock design_block(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                         const std::vector<std::string>& fields);

/// Expands fixed-effect fields into `field_value` dummies over the given
/// rows, dropping the first (sorted) value of each field.
DesignBlock fixed_effect_dummies(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                                 const std::vector<std::string>& fields);

/// Numeric values of one field for the given rows ("year" allowed).
Eigen::VectorXd field_values(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                             const std::string& field);

/// Concatenates blocks side by side.
DesignBlock hcat(const std::vector<DesignBlock>& blocks);

} // namespace paneldml
