#include "paneldml/panel_io.hpp"

#include "paneldml/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace paneldml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

bool parse_number(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, result.ptr};
}

PanelDataset load_panel(const std::string& path, const VariableSchema& schema,
                        std::vector<RowRejection>* rejections) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);

    std::string line;
    // Skip metadata comments before the header.
    do {
        if (!std::getline(in, line)) throw DataError(path + ": no data rows");
        line = strip_cr(line);
    } while (line.empty() || line[0] == '#');

    const auto header = split_csv_line(line);
    std::vector<int> field_col(schema.fields().size(), -1);
    for (std::size_t f = 0; f < schema.fields().size(); ++f) {
        const auto& spec = schema.fields()[f];
        const auto it = std::find(header.begin(), header.end(), spec.input_column());
        if (it == header.end()) {
            if (spec.required)
                throw DataError(path + ": missing required column '" + spec.input_column() + "'");
            continue;
        }
        field_col[f] = static_cast<int>(it - header.begin());
    }

    PanelDataset ds;
    for (const auto& spec : schema.fields()) {
        if (spec.kind == FieldKind::Identifier || spec.kind == FieldKind::Year) continue;
        if (field_col[static_cast<std::size_t>(&spec - schema.fields().data())] < 0) continue;
        ds.add_column(spec.name, spec.labels);
    }

    std::size_t row_number = 0;
    std::size_t parsed_rows = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++row_number;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(row_number) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));

        std::string household_id;
        int year = 0;
        std::vector<double> values;
        values.reserve(ds.n_columns());
        bool rejected = false;

        const auto reject = [&](const FieldSpec& spec, const std::string& reason) {
            if (rejections) rejections->push_back({row_number, spec.name, reason});
            rejected = true;
        };

        for (std::size_t f = 0; f < schema.fields().size() && !rejected; ++f) {
            const auto& spec = schema.fields()[f];
            if (field_col[f] < 0) continue; // unmapped optional field, no column

            const std::string& cell = cells[static_cast<std::size_t>(field_col[f])];

            if (spec.kind == FieldKind::Identifier) {
                if (cell.empty()) {
                    reject(spec, "missing household id");
                } else {
                    household_id = cell;
                }
                continue;
            }
            if (spec.kind == FieldKind::Year) {
                double y;
                if (!parse_number(cell, y) || !is_integral(y)) {
                    reject(spec, "unparseable year '" + cell + "'");
                } else {
                    year = static_cast<int>(y);
                }
                continue;
            }

            double v = kNaN;
            if (cell.empty()) {
                if (spec.required) {
                    reject(spec, "missing value");
                    continue;
                }
            } else if (spec.kind == FieldKind::Category) {
                const auto it = std::find(spec.labels.begin(), spec.labels.end(), cell);
                if (it != spec.labels.end()) {
                    v = static_cast<double>(it - spec.labels.begin());
                } else if (parse_number(cell, v)) {
                    if (!is_integral(v) || v < 0.0 ||
                        v >= static_cast<double>(spec.labels.size()))
                        throw DataError(path + ": row " + std::to_string(row_number) +
                                        ", column '" + spec.input_column() + "': code " + cell +
                                        " outside 0.." + std::to_string(spec.labels.size() - 1));
                } else {
                    reject(spec, "'" + cell + "' is neither a label nor a code");
                    continue;
                }
            } else {
                if (!parse_number(cell, v)) {
                    if (spec.required) {
                        reject(spec, "unparseable value '" + cell + "'");
                        continue;
                    }
                    v = kNaN;
                } else {
                    const bool needs_integer = spec.kind == FieldKind::Integer ||
                                               spec.kind == FieldKind::Binary ||
                                               spec.kind == FieldKind::Coded;
                    if (needs_integer && !is_integral(v))
                        throw DataError(path + ": row " + std::to_string(row_number) +
                                        ", column '" + spec.input_column() + "': value " + cell +
                                        " is not an integer code");
                    if (v < spec.min || v > spec.max)
                        throw DataError(path + ": row " + std::to_string(row_number) +
                                        ", column '" + spec.input_column() + "': value " + cell +
                                        " outside legal range " + spec.bounds_text());
                }
            }
            values.push_back(v);
        }

        if (rejected) continue;

        // Per-row consistency: the composite index must equal the mean of
        // the four service flags whenever all five are present.
        const auto idx_of = [&](const char* name) -> int {
            const auto& names = ds.column_names();
            const auto it = std::find(names.begin(), names.end(), name);
            return it == names.end() ? -1 : static_cast<int>(it - names.begin());
        };
        static const char* kFlagFields[4] = {"credit_card", "digital_payment", "bank_account",
                                             "insurance"};
        const int fa_idx = idx_of("fa_index");
        if (fa_idx >= 0 && !std::isnan(values[static_cast<std::size_t>(fa_idx)])) {
            double flag_sum = 0.0;
            int n_flags = 0;
            for (const char* flag : kFlagFields) {
                const int i = idx_of(flag);
                if (i >= 0 && !std::isnan(values[static_cast<std::size_t>(i)])) {
                    flag_sum += values[static_cast<std::size_t>(i)];
                    ++n_flags;
                }
            }
            if (n_flags == 4 &&
                std::abs(values[static_cast<std::size_t>(fa_idx)] - flag_sum / 4.0) > 1e-9) {
                if (rejections)
                    rejections->push_back(
                        {row_number, "fa_index", "inconsistent with the four service flags"});
                continue;
            }
        }

        ds.append_row(std::move(household_id), year, values);
        ++parsed_rows;
    }

    if (row_number == 0) throw DataError(path + ": no data rows");
    (void)parsed_rows;
    return ds;
}

PanelDataset load_canonical(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);

    std::string line;
    do {
        if (!std::getline(in, line)) throw DataError(path + ": no data rows");
        line = strip_cr(line);
    } while (line.empty() || line[0] == '#');

    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "household_id:str" || header[1] != "year:int")
        throw DataError(path + ": canonical header must start with household_id:str,year:int");

    PanelDataset ds;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const auto& token = header[c];
        const auto colon = token.find(':');
        if (colon == std::string::npos)
            throw DataError(path + ": untyped canonical column '" + token + "'");
        const std::string name = token.substr(0, colon);
        const std::string type = token.substr(colon + 1);
        if (type == "num") {
            ds.add_column(name);
        } else if (type.rfind("cat{", 0) == 0 && type.back() == '}') {
            std::vector<std::string> labels;
            std::string label;
            std::istringstream labels_in(type.substr(4, type.size() - 5));
            while (std::getline(labels_in, label, '|')) labels.push_back(label);
            ds.add_column(name, labels);
        } else {
            throw DataError(path + ": unknown canonical column type '" + type + "'");
        }
    }

    std::size_t row_number = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++row_number;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(row_number) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
        double year;
        if (cells[0].empty() || !parse_number(cells[1], year) || !is_integral(year))
            throw DataError(path + ": row " + std::to_string(row_number) + ": bad id or year");
        std::vector<double> values;
        values.reserve(cells.size() - 2);
        for (std::size_t c = 2; c < cells.size(); ++c) {
            double v = kNaN;
            if (!cells[c].empty() && !parse_number(cells[c], v))
                throw DataError(path + ": row " + std::to_string(row_number) + ", column '" +
                                header[c] + "': unparseable value '" + cells[c] + "'");
            values.push_back(v);
        }
        ds.append_row(cells[0], static_cast<int>(year), values);
    }
    if (row_number == 0) throw DataError(path + ": no data rows");
    return ds;
}

void save_panel(const PanelDataset& ds, const std::string& path,
                const std::vector<std::string>& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write output file: " + path);
    for (const auto& m : meta) out << "# " << m << '\n';

    out << "household_id:str,year:int";
    for (const auto& name : ds.column_names()) {
        out << ',' << name << ':';
        const auto& labels = ds.labels(name);
        if (labels.empty()) {
            out << "num";
        } else {
            out << "cat{";
            for (std::size_t i = 0; i < labels.size(); ++i)
                out << (i ? "|" : "") << labels[i];
            out << '}';
        }
    }
    out << '\n';

    std::vector<const std::vector<double>*> cols;
    cols.reserve(ds.n_columns());
    for (const auto& name : ds.column_names()) cols.push_back(&ds.column(name));

    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        out << ds.household_ids()[i] << ',' << ds.years()[i];
        for (const auto* col : cols) {
            out << ',';
            const double v = (*col)[i];
            if (!std::isnan(v)) out << format_double(v);
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing output file: " + path);
}

} // namespace paneldml
