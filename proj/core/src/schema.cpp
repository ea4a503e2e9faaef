#include "paneldml/schema.hpp"

#include "paneldml/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace paneldml {

namespace {

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, delim)) out.push_back(part);
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

FieldKind parse_kind(const std::string& text) {
    if (text == "identifier") return FieldKind::Identifier;
    if (text == "year") return FieldKind::Year;
    if (text == "real") return FieldKind::Real;
    if (text == "integer") return FieldKind::Integer;
    if (text == "binary") return FieldKind::Binary;
    if (text == "coded") return FieldKind::Coded;
    if (text == "category") return FieldKind::Category;
    throw ConfigError("schema: unknown field kind '" + text + "'");
}

} // namespace

bool FieldSpec::has_bounds() const { return std::isfinite(min) || std::isfinite(max); }

std::string FieldSpec::bounds_text() const {
    std::ostringstream out;
    out << min << ".." << max;
    return out.str();
}

void VariableSchema::add(FieldSpec spec) {
    if (spec.kind == FieldKind::Binary) {
        spec.min = 0.0;
        spec.max = 1.0;
    }
    fields_.push_back(std::move(spec));
}

const FieldSpec* VariableSchema::find(const std::string& name) const {
    for (const auto& f : fields_) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

const FieldSpec& VariableSchema::identifier_field() const {
    for (const auto& f : fields_) {
        if (f.kind == FieldKind::Identifier) return f;
    }
    throw ConfigError("schema: no identifier field declared");
}

const FieldSpec& VariableSchema::year_field() const {
    for (const auto& f : fields_) {
        if (f.kind == FieldKind::Year) return f;
    }
    throw ConfigError("schema: no year field declared");
}

void VariableSchema::validate() const {
    std::set<std::string> names, columns;
    int n_id = 0, n_year = 0;
    for (const auto& f : fields_) {
        if (f.name.empty()) throw ConfigError("schema: field with empty name");
        if (!names.insert(f.name).second)
            throw ConfigError("schema: duplicate field name '" + f.name + "'");
        if (!columns.insert(f.input_column()).second)
            throw ConfigError("schema: column '" + f.input_column() + "' mapped twice");
        if (f.kind == FieldKind::Identifier) ++n_id;
        if (f.kind == FieldKind::Year) ++n_year;
        if (f.kind == FieldKind::Category && f.labels.empty())
            throw ConfigError("schema: category field '" + f.name + "' has no labels");
    }
    if (n_id != 1) throw ConfigError("schema: exactly one identifier field required");
    if (n_year != 1) throw ConfigError("schema: exactly one year field required");
}

VariableSchema VariableSchema::parse(const std::string& text) {
    VariableSchema schema;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream tokens(line);
        std::string word;
        tokens >> word;
        if (word != "field")
            throw ConfigError("schema line " + std::to_string(line_no) +
                              ": expected 'field', got '" + word + "'");
        FieldSpec spec;
        if (!(tokens >> spec.name))
            throw ConfigError("schema line " + std::to_string(line_no) + ": missing field name");
        while (tokens >> word) {
            if (word == "optional") {
                spec.required = false;
            } else if (word.rfind("kind=", 0) == 0) {
                spec.kind = parse_kind(word.substr(5));
            } else if (word.rfind("column=", 0) == 0) {
                spec.column = word.substr(7);
            } else if (word.rfind("labels=", 0) == 0) {
                spec.labels = split(word.substr(7), '|');
            } else if (word.rfind("range=", 0) == 0) {
                const auto sep = word.find("..", 6);
                if (sep == std::string::npos)
                    throw ConfigError("schema line " + std::to_string(line_no) +
                                      ": range must be lo..hi");
                try {
                    spec.min = std::stod(word.substr(6, sep - 6));
                    spec.max = std::stod(word.substr(sep + 2));
                } catch (const std::exception&) {
                    throw ConfigError("schema line " + std::to_string(line_no) +
                                      ": bad range '" + word.substr(6) + "'");
                }
            } else {
                throw ConfigError("schema line " + std::to_string(line_no) +
                                  ": unknown attribute '" + word + "'");
            }
        }
        schema.add(std::move(spec));
    }
    schema.validate();
    return schema;
}

VariableSchema VariableSchema::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace paneldml
