#include "paneldml/design.hpp"

#include "paneldml/errors.hpp"
#include "paneldml/panel_io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace paneldml {

namespace {

bool is_virtual_year(const PanelDataset& ds, const std::string& field) {
    return field == "year" && !ds.has_column("year");
}

std::vector<double> resolve_field(const PanelDataset& ds, const std::string& field) {
    if (is_virtual_year(ds, field)) {
        std::vector<double> out(ds.n_rows());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = static_cast<double>(ds.years()[i]);
        return out;
    }
    return ds.column(field);
}

std::string value_name(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    return format_double(v);
}

} // namespace

std::vector<std::size_t> complete_rows(const PanelDataset& ds,
                                       const std::vector<std::string>& fields) {
    std::vector<std::vector<double>> cols;
    cols.reserve(fields.size());
    for (const auto& f : fields) cols.push_back(resolve_field(ds, f));
    std::vector<std::size_t> rows;
    rows.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        bool ok = true;
        for (const auto& col : cols) {
            if (std::isnan(col[i])) {
                ok = false;
                break;
            }
        }
        if (ok) rows.push_back(i);
    }
    return rows;
}

DesignBlock design_block(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                         const std::vector<std::string>& fields) {
    std::vector<std::vector<double>> columns;
    std::vector<std::string> names;

    for (const auto& field : fields) {
        const auto values = resolve_field(ds, field);
        const auto& labels = is_virtual_year(ds, field) ? std::vector<std::string>{}
                                                        : ds.labels(field);
        if (labels.empty()) {
            std::vector<double> col(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) col[i] = values[rows[i]];
            columns.push_back(std::move(col));
            names.push_back(field);
        } else {
            // One dummy per level, first level dropped.
            for (std::size_t level = 1; level < labels.size(); ++level) {
                std::vector<double> col(rows.size());
                for (std::size_t i = 0; i < rows.size(); ++i)
                    col[i] = values[rows[i]] == static_cast<double>(level) ? 1.0 : 0.0;
                columns.push_back(std::move(col));
                names.push_back(field + "_" + labels[level]);
            }
        }
    }

    DesignBlock block;
    block.names = std::move(names);
    block.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            block.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                columns[c][i];
    }
    return block;
}

DesignBlock fixed_effect_dummies(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                                 const std::vector<std::string>& fields) {
    std::vector<std::vector<double>> columns;
    std::vector<std::string> names;

    for (const auto& field : fields) {
        const auto values = resolve_field(ds, field);
        std::set<double> distinct;
        for (const std::size_t r : rows) {
            if (std::isnan(values[r]))
                throw DataError("fixed effect '" + field + "' has missing values");
            distinct.insert(values[r]);
        }
        if (distinct.size() < 2) continue; // constant field adds nothing
        bool first = true;
        for (const double v : distinct) {
            if (first) { // reference level absorbed by the intercept
                first = false;
                continue;
            }
            std::vector<double> col(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                col[i] = values[rows[i]] == v ? 1.0 : 0.0;
            columns.push_back(std::move(col));
            names.push_back(field + "_" + value_name(v));
        }
    }

    DesignBlock block;
    block.names = std::move(names);
    block.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            block.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                columns[c][i];
    }
    return block;
}

Eigen::VectorXd field_values(const PanelDataset& ds, const std::vector<std::size_t>& rows,
                             const std::string& field) {
    const auto values = resolve_field(ds, field);
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = values[rows[i]];
    return out;
}

DesignBlock hcat(const std::vector<DesignBlock>& blocks) {
    DesignBlock out;
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        if (b.cols() > 0) rows = b.values.rows();
        cols += b.cols();
    }
    out.values.resize(rows, cols);
    Eigen::Index offset = 0;
    for (const auto& b : blocks) {
        if (b.cols() == 0) continue;
        out.values.middleCols(offset, b.cols()) = b.values;
        offset += b.cols();
        out.names.insert(out.names.end(), b.names.begin(), b.names.end());
    }
    return out;
}

} // namespace paneldml
