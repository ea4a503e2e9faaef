#pragma once

#include "paneldml/panel.hpp"
#include "paneldml/schema.hpp"

#include <string>
#include <vector>

namespace paneldml {

/// A row dropped during loading, with the reason.
struct RowRejection {
    std::size_t row_number; // 1-based data-row index
    std::string column;
    std::string reason;
};

/// Loads a raw comma-delimited survey export through a schema. Column
/// headers are matched against the schema's input columns; every mapped
/// value is parsed and range-validated against its coding.
///
/// Rows with a missing or unparseable required value are rejected (dropped,
/// recorded in `rejections` when given). Values violating a declared coding
/// range abort the load with a DataError naming row, column, and value.
PanelDataset load_panel(const std::string& path, const VariableSchema& schema,
                        std::vector<RowRejection>* rejections = nullptr);

/// Reads the canonical dataset format written by save_panel: leading '#'
/// metadata lines, then a typed header like
///   household_id:str,year:int,fa_index:num,asset_group:cat{low|middle|high}
PanelDataset load_canonical(const std::string& path);

/// Writes the canonical format. `meta` lines are emitted as '# key=value'
/// before the header. Doubles use shortest round-trip formatting; missing
/// values are empty cells.
void save_panel(const PanelDataset& ds, const std::string& path,
                const std::vector<std::string>& meta = {});

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

} // namespace paneldml
