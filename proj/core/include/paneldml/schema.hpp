#pragma once

#include <limits>
#include <string>
#include <vector>

namespace paneldml {

enum class FieldKind {
    Identifier, // opaque unit id (string)
    Year,       // integer wave label
    Real,       // numeric, optional [min, max] bounds
    Integer,    // numeric, must be integral, optional bounds
    Binary,     // {0, 1}
    Coded,      // integer codes in [min, max]
    Category,   // labelled codes; input may carry the label or the code
};

/// One semantic field: where it comes from and what values are legal.
struct FieldSpec {
    std::string name;   // semantic name; becomes the canonical column name
    std::string column; // input column header; empty means same as name
    FieldKind kind = FieldKind::Real;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::vector<std::string> labels; // Category only, code = index
    bool required = true;

    const std::string& input_column() const { return column.empty() ? name : column; }
    bool has_bounds() const;
    std::string bounds_text() const;
};

/// Maps semantic fields to input columns and pins their coding ranges.
/// Parsed from a line-oriented key=value text file, e.g.
///
///   field household_id kind=identifier column=hhid
///   field year kind=year
///   field edu kind=coded range=1..9
///   field asset_group kind=category labels=low|middle|high
///   field sharpe kind=real optional
class VariableSchema {
  public:
    void add(FieldSpec spec);
    const std::vector<FieldSpec>& fields() const { return fields_; }
    const FieldSpec* find(const std::string& name) const;
    const FieldSpec& identifier_field() const;
    const FieldSpec& year_field() const;

    /// Throws ConfigError unless exactly one identifier and one year field
    /// exist and no two fields share a semantic name or input column.
    void validate() const;

    static VariableSchema parse(const std::string& text);
    static VariableSchema parse_file(const std::string& path);

  private:
    std::vector<FieldSpec> fields_;
};

} // namespace paneldml
