#include "paneldml/panel.hpp"

#include "paneldml/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace paneldml {

namespace {

bool is_missing(double v) { return std::isnan(v); }

} // namespace

bool PanelDataset::has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t PanelDataset::column_index(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw DataError("unknown variable '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<double>& PanelDataset::column(const std::string& name) const {
    return columns_[column_index(name)];
}

const std::vector<std::string>& PanelDataset::labels(const std::string& name) const {
    return column_labels_[column_index(name)];
}

std::vector<int> PanelDataset::waves() const {
    std::set<int> distinct(years_.begin(), years_.end());
    return {distinct.begin(), distinct.end()};
}

std::vector<std::string> PanelDataset::households() const {
    std::set<std::string> distinct(household_ids_.begin(), household_ids_.end());
    return {distinct.begin(), distinct.end()};
}

ObservationRow PanelDataset::row(std::size_t i) const {
    ObservationRow r;
    r.household_id = household_ids_.at(i);
    r.year = years_.at(i);
    for (std::size_t c = 0; c < names_.size(); ++c) r.values[names_[c]] = columns_[c][i];
    return r;
}

void PanelDataset::reserve(std::size_t n_rows) {
    household_ids_.reserve(n_rows);
    years_.reserve(n_rows);
    for (auto& col : columns_) col.reserve(n_rows);
}

void PanelDataset::add_column(const std::string& name, std::vector<std::string> labels) {
    if (has_column(name)) throw DataError("duplicate column '" + name + "'");
    names_.push_back(name);
    columns_.emplace_back(n_rows(), std::numeric_limits<double>::quiet_NaN());
    column_labels_.push_back(std::move(labels));
}

void PanelDataset::append_row(std::string household_id, int year,
                              const std::vector<double>& values) {
    if (values.size() != names_.size())
        throw DataError("row width mismatch: expected " + std::to_string(names_.size()) +
                        " values, got " + std::to_string(values.size()));
    household_ids_.push_back(std::move(household_id));
    years_.push_back(year);
    for (std::size_t c = 0; c < values.size(); ++c) columns_[c].push_back(values[c]);
}

void PanelDataset::set_column(const std::string& name, std::vector<double> values,
                              std::vector<std::string> labels) {
    if (values.size() != n_rows())
        throw DataError("column '" + name + "' length mismatch");
    if (has_column(name)) {
        const auto idx = column_index(name);
        columns_[idx] = std::move(values);
        column_labels_[idx] = std::move(labels);
    } else {
        names_.push_back(name);
        columns_.push_back(std::move(values));
        column_labels_.push_back(std::move(labels));
    }
}

void PanelDataset::drop_column(const std::string& name) {
    const auto idx = column_index(name);
    names_.erase(names_.begin() + static_cast<std::ptrdiff_t>(idx));
    columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(idx));
    column_labels_.erase(column_labels_.begin() + static_cast<std::ptrdiff_t>(idx));
}

PanelDataset PanelDataset::select_rows(const std::vector<std::size_t>& rows) const {
    PanelDataset out;
    out.names_ = names_;
    out.column_labels_ = column_labels_;
    out.columns_.resize(names_.size());
    out.reserve(rows.size());
    for (const std::size_t i : rows) {
        out.household_ids_.push_back(household_ids_.at(i));
        out.years_.push_back(years_.at(i));
        for (std::size_t c = 0; c < columns_.size(); ++c)
            out.columns_[c].push_back(columns_[c][i]);
    }
    return out;
}

PanelDataset enforce_balance(const PanelDataset& ds) {
    const auto waves = ds.waves();
    if (waves.empty()) throw DataError("enforce_balance: dataset has no waves");
    const std::size_t n_waves = waves.size();

    std::unordered_map<std::string, std::set<int>> seen;
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        seen[ds.household_ids()[i]].insert(ds.years()[i]);

    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (seen.at(ds.household_ids()[i]).size() == n_waves) keep.push_back(i);
    }
    return ds.select_rows(keep);
}

double quantile(std::vector<double> values, double q) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) throw DataError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    if (q <= 0.0) return values.front();
    if (q >= 1.0) return values.back();
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

PanelDataset trim_tails(const PanelDataset& ds, const std::string& variable, double fraction) {
    if (!(fraction >= 0.0 && fraction < 0.5))
        throw DataError("trim_tails: fraction out of range [0, 0.5): " +
                        std::to_string(fraction));
    const auto& values = ds.column(variable);
    if (fraction == 0.0 || ds.n_rows() == 0) return ds;

    const double lower = quantile(values, fraction);
    const double upper = quantile(values, 1.0 - fraction);

    std::unordered_set<std::string> dropped;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const double v = values[i];
        if (!is_missing(v) && (v < lower || v > upper)) dropped.insert(ds.household_ids()[i]);
    }
    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (!dropped.count(ds.household_ids()[i])) keep.push_back(i);
    }
    return ds.select_rows(keep);
}

PanelDataset filter_adults(const PanelDataset& ds) {
    const auto& age = ds.column("age");
    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (is_missing(age[i]) || age[i] >= 18.0) keep.push_back(i);
    }
    const PanelDataset filtered = ds.select_rows(keep);
    if (filtered.n_rows() == 0) return filtered;
    return enforce_balance(filtered);
}

SubsetPredicate SubsetPredicate::parse(const std::string& text) {
    SubsetPredicate p;
    std::string body = text;
    const auto at = body.rfind('@');
    if (at != std::string::npos) {
        try {
            p.reference_wave = std::stoi(body.substr(at + 1));
        } catch (const std::exception&) {
            throw ConfigError("subset predicate: bad wave in '" + text + "'");
        }
        body = body.substr(0, at);
    }
    static const std::vector<std::pair<std::string, PredicateOp>> ops = {
        {"!=", PredicateOp::Ne}, {"<=", PredicateOp::Le}, {">=", PredicateOp::Ge},
        {"=", PredicateOp::Eq},  {"<", PredicateOp::Lt},  {">", PredicateOp::Gt},
    };
    for (const auto& [token, op] : ops) {
        const auto pos = body.find(token);
        if (pos != std::string::npos) {
            p.field = body.substr(0, pos);
            p.op = op;
            p.value = body.substr(pos + token.size());
            if (p.field.empty() || p.value.empty())
                throw ConfigError("subset predicate: malformed '" + text + "'");
            return p;
        }
    }
    throw ConfigError("subset predicate: no comparison operator in '" + text + "'");
}

std::string SubsetPredicate::text() const {
    static const std::map<PredicateOp, std::string> names = {
        {PredicateOp::Eq, "="},  {PredicateOp::Ne, "!="}, {PredicateOp::Lt, "<"},
        {PredicateOp::Le, "<="}, {PredicateOp::Gt, ">"},  {PredicateOp::Ge, ">="},
    };
    std::string out = field + names.at(op) + value;
    if (reference_wave) out += "@" + std::to_string(*reference_wave);
    return out;
}

PanelDataset subset(const PanelDataset& ds, const SubsetPredicate& predicate) {
    const auto& values = ds.column(predicate.field);
    const auto waves = ds.waves();
    if (waves.empty()) throw DataError("subset: dataset has no waves");
    const int ref_wave = predicate.reference_wave.value_or(waves.back());
    if (std::find(waves.begin(), waves.end(), ref_wave) == waves.end())
        throw DataError("subset: reference wave " + std::to_string(ref_wave) +
                        " not present in dataset");

    // Resolve the comparison value; labels allowed for categorical fields.
    double target;
    const auto& labels = ds.labels(predicate.field);
    const auto label_it = std::find(labels.begin(), labels.end(), predicate.value);
    if (label_it != labels.end()) {
        target = static_cast<double>(label_it - labels.begin());
    } else {
        try {
            target = std::stod(predicate.value);
        } catch (const std::exception&) {
            throw DataError("subset: value '" + predicate.value + "' is neither numeric nor a label of '" +
                            predicate.field + "'");
        }
    }

    const auto holds = [&](double v) {
        if (is_missing(v)) return false;
        switch (predicate.op) {
        case PredicateOp::Eq: return v == target;
        case PredicateOp::Ne: return v != target;
        case PredicateOp::Lt: return v < target;
        case PredicateOp::Le: return v <= target;
        case PredicateOp::Gt: return v > target;
        case PredicateOp::Ge: return v >= target;
        }
        return false;
    };

    std::unordered_set<std::string> selected;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (ds.years()[i] == ref_wave && holds(values[i])) selected.insert(ds.household_ids()[i]);
    }
    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (selected.count(ds.household_ids()[i])) keep.push_back(i);
    }
    return ds.select_rows(keep);
}

SummaryTable summary_stats(const PanelDataset& ds) {
    if (ds.n_rows() == 0) throw DataError("summary_stats: empty dataset");
    SummaryTable table;
    for (const auto& name : ds.column_names()) {
        std::vector<double> values;
        values.reserve(ds.n_rows());
        for (const double v : ds.column(name)) {
            if (!is_missing(v)) values.push_back(v);
        }
        if (values.empty()) continue;
        VariableSummary s;
        s.variable = name;
        const std::size_t n = values.size();
        double sum = 0.0;
        s.min = values.front();
        s.max = values.front();
        for (const double v : values) {
            sum += v;
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
        }
        s.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        s.median = quantile(values, 0.5);
        table.rows.push_back(s);
    }
    return table;
}

std::string SummaryTable::to_text() const {
    std::ostringstream out;
    out << std::left << std::setw(18) << "Variable" << std::right << std::setw(12) << "Median"
        << std::setw(12) << "Mean" << std::setw(12) << "Std. Dev." << std::setw(12) << "Min"
        << std::setw(12) << "Max" << '\n';
    out << std::string(78, '-') << '\n';
    out << std::fixed << std::setprecision(3);
    for (const auto& r : rows) {
        out << std::left << std::setw(18) << r.variable << std::right << std::setw(12) << r.median
            << std::setw(12) << r.mean << std::setw(12) << r.sd << std::setw(12) << r.min
            << std::setw(12) << r.max << '\n';
    }
    return out.str();
}

PanelDataset drop_missing(const PanelDataset& ds, const std::vector<std::string>& fields,
                          bool household_level) {
    std::vector<const std::vector<double>*> cols;
    cols.reserve(fields.size());
    for (const auto& f : fields) cols.push_back(&ds.column(f));

    const auto row_ok = [&](std::size_t i) {
        for (const auto* col : cols) {
            if (is_missing((*col)[i])) return false;
        }
        return true;
    };

    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    if (household_level) {
        std::unordered_set<std::string> bad;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            if (!row_ok(i)) bad.insert(ds.household_ids()[i]);
        }
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            if (!bad.count(ds.household_ids()[i])) keep.push_back(i);
        }
    } else {
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            if (row_ok(i)) keep.push_back(i);
        }
    }
    return ds.select_rows(keep);
}

PanelDataset restrict_waves(const PanelDataset& ds, const std::vector<int>& waves_to_keep) {
    const std::set<int> wanted(waves_to_keep.begin(), waves_to_keep.end());
    const auto available = ds.waves();
    for (const int w : wanted) {
        if (std::find(available.begin(), available.end(), w) == available.end())
            throw DataError("restrict_waves: wave " + std::to_string(w) + " not in dataset");
    }
    std::vector<std::size_t> keep;
    keep.reserve(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (wanted.count(ds.years()[i])) keep.push_back(i);
    }
    return ds.select_rows(keep);
}

} // namespace paneldml
