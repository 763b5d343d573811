#include "riskshare/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "riskshare/format.hpp"

namespace riskshare {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_value(const std::string& text, long row) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericValue,
                    "row " + std::to_string(row) + ": cannot parse value '" + text + "'");
    }
    return v;
}

int parse_year(const std::string& text, long row) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const long y = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw Error(ErrorCode::NonNumericValue,
                    "row " + std::to_string(row) + ": cannot parse year '" + text + "'");
    }
    return static_cast<int>(y);
}

struct CellStore {
    std::set<std::string> units;
    std::set<int> years;
    std::set<std::string> variables;
    std::map<std::tuple<std::string, int, std::string>, double> cells;

    void add(const std::string& unit, int year, const std::string& var, double value, long row) {
        const auto key = std::make_tuple(unit, year, var);
        if (cells.count(key)) {
            throw Error(ErrorCode::DuplicateCell, "row " + std::to_string(row) + ": cell (" +
                                                      unit + ", " + std::to_string(year) + ", " +
                                                      var + ") appears twice");
        }
        cells.emplace(key, value);
        units.insert(unit);
        years.insert(year);
        variables.insert(var);
    }

    PanelDataset assemble() const {
        PanelDataset p;
        p.units.assign(units.begin(), units.end());
        p.years.assign(years.begin(), years.end());
        for (const auto& var : variables) {
            Eigen::MatrixXd m(p.units.size(), p.years.size());
            for (std::size_t u = 0; u < p.units.size(); ++u) {
                for (std::size_t t = 0; t < p.years.size(); ++t) {
                    const auto it = cells.find(std::make_tuple(p.units[u], p.years[t], var));
                    if (it == cells.end()) {
                        throw Error(ErrorCode::MissingCell,
                                    "cell (" + p.units[u] + ", " + std::to_string(p.years[t]) +
                                        ", " + var + ") is absent");
                    }
                    m(static_cast<long>(u), static_cast<long>(t)) = it->second;
                }
            }
            p.variables.emplace(var, std::move(m));
        }
        p.validate();
        return p;
    }
};

}  // namespace

int PanelDataset::unit_index(const std::string& unit) const {
    const auto it = std::find(units.begin(), units.end(), unit);
    if (it == units.end()) {
        throw Error(ErrorCode::UnknownVariable, "unit '" + unit + "' not in panel");
    }
    return static_cast<int>(it - units.begin());
}

int PanelDataset::year_index(int year) const {
    const auto it = std::find(years.begin(), years.end(), year);
    if (it == years.end()) {
        throw Error(ErrorCode::UnknownVariable, "year " + std::to_string(year) + " not in panel");
    }
    return static_cast<int>(it - years.begin());
}

bool PanelDataset::has_variable(const std::string& name) const {
    return variables.count(name) > 0;
}

const Eigen::MatrixXd& PanelDataset::variable(const std::string& name) const {
    const auto it = variables.find(name);
    if (it == variables.end()) {
        throw Error(ErrorCode::UnknownVariable, "variable '" + name + "' not in panel");
    }
    return it->second;
}

double PanelDataset::cell(const std::string& unit, int year, const std::string& var) const {
    return variable(var)(unit_index(unit), year_index(year));
}

std::vector<std::string> PanelDataset::variable_names() const {
    std::vector<std::string> names;
    names.reserve(variables.size());
    for (const auto& [name, _] : variables) names.push_back(name);
    return names;
}

void PanelDataset::validate() const {
    if (units.empty() || years.empty()) {
        throw Error(ErrorCode::MissingCell, "panel has no units or no years");
    }
    for (std::size_t t = 1; t < years.size(); ++t) {
        if (years[t] != years[t - 1] + 1) {
            throw Error(ErrorCode::NonContiguousYears,
                        "gap between " + std::to_string(years[t - 1]) + " and " +
                            std::to_string(years[t]));
        }
    }
    std::set<std::string> seen(units.begin(), units.end());
    if (seen.size() != units.size()) {
        throw Error(ErrorCode::DuplicateCell, "duplicate unit id");
    }
    for (const auto& [name, m] : variables) {
        if (m.rows() != static_cast<long>(units.size()) ||
            m.cols() != static_cast<long>(years.size())) {
            throw Error(ErrorCode::MissingCell, "variable '" + name + "' grid shape mismatch");
        }
        if (!m.allFinite()) {
            throw Error(ErrorCode::NonNumericValue, "variable '" + name + "' has non-finite cells");
        }
    }
}

PanelDataset PanelDataset::select_units(const std::vector<std::string>& keep) const {
    PanelDataset out;
    out.years = years;
    out.source = source;
    out.units = keep;
    std::vector<int> idx;
    idx.reserve(keep.size());
    for (const auto& u : keep) idx.push_back(unit_index(u));
    for (const auto& [name, m] : variables) {
        Eigen::MatrixXd sub(keep.size(), years.size());
        for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<long>(r)) = m.row(idx[r]);
        out.variables.emplace(name, std::move(sub));
    }
    out.validate();
    return out;
}

PanelDataset PanelDataset::select_years(int first, int last) const {
    if (first > last) throw Error(ErrorCode::EmptyWindow, "year window is empty");
    const int i0 = year_index(first);
    const int i1 = year_index(last);
    PanelDataset out;
    out.units = units;
    out.source = source;
    out.years.assign(years.begin() + i0, years.begin() + i1 + 1);
    const long width = i1 - i0 + 1;
    for (const auto& [name, m] : variables) {
        out.variables.emplace(name, m.middleCols(i0, width));
    }
    out.validate();
    return out;
}

PanelDataset load_panel(const std::string& path, CsvFormat format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "'" + path + "' is empty");
    const auto header = split_csv_line(line);

    CellStore store;
    long row = 1;
    if (format == CsvFormat::LongCsv) {
        const std::vector<std::string> expected = {"unit", "year", "variable", "value"};
        if (std::vector<std::string>(header.begin(), header.end()) != expected) {
            throw Error(ErrorCode::IoError,
                        "long CSV header must be exactly 'unit,year,variable,value'");
        }
        while (std::getline(in, line)) {
            ++row;
            if (line.empty() || line.front() == '#') continue;
            const auto f = split_csv_line(line);
            if (f.size() != 4) {
                throw Error(ErrorCode::NonNumericValue,
                            "row " + std::to_string(row) + ": expected 4 fields");
            }
            store.add(f[0], parse_year(f[1], row), f[2], parse_value(f[3], row), row);
        }
    } else {
        if (header.size() < 3 || header[0] != "unit" || header[1] != "year") {
            throw Error(ErrorCode::IoError,
                        "wide CSV header must start with 'unit,year' and name one variable "
                        "column per variable");
        }
        while (std::getline(in, line)) {
            ++row;
            if (line.empty() || line.front() == '#') continue;
            const auto f = split_csv_line(line);
            if (f.size() != header.size()) {
                throw Error(ErrorCode::NonNumericValue,
                            "row " + std::to_string(row) + ": field count differs from header");
            }
            const int year = parse_year(f[1], row);
            for (std::size_t c = 2; c < f.size(); ++c) {
                store.add(f[0], year, header[c], parse_value(f[c], row), row);
            }
        }
    }
    return store.assemble();
}

void write_panel(const PanelDataset& panel, const std::string& path, CsvFormat format,
                 const std::string& trailing_comment) {
    panel.validate();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    if (format == CsvFormat::LongCsv) {
        out << "unit,year,variable,value\n";
        for (const auto& unit : panel.units) {
            const long u = panel.unit_index(unit);
            for (std::size_t t = 0; t < panel.years.size(); ++t) {
                for (const auto& [name, m] : panel.variables) {
                    out << csv_escape(unit) << ',' << panel.years[t] << ',' << csv_escape(name)
                        << ',' << format_sig12(m(u, static_cast<long>(t))) << '\n';
                }
            }
        }
    } else {
        out << "unit,year";
        for (const auto& [name, _] : panel.variables) out << ',' << csv_escape(name);
        out << '\n';
        for (const auto& unit : panel.units) {
            const long u = panel.unit_index(unit);
            for (std::size_t t = 0; t < panel.years.size(); ++t) {
                out << csv_escape(unit) << ',' << panel.years[t];
                for (const auto& [_, m] : panel.variables) {
                    out << ',' << format_sig12(m(u, static_cast<long>(t)));
                }
                out << '\n';
            }
        }
    }
    if (!trailing_comment.empty()) out << "# " << trailing_comment << '\n';
}

Series log_series(const Series& s) {
    Series out = s;
    for (long i = 0; i < s.values.size(); ++i) {
        if (s.values[i] <= 0.0) {
            throw Error(ErrorCode::NonPositiveValue,
                        s.variable + " of " + s.unit + " at position " + std::to_string(i) +
                            " is not strictly positive");
        }
        out.values[i] = std::log(s.values[i]);
    }
    return out;
}

Series first_differences(const Series& s) {
    if (s.values.size() < 2) {
        throw Error(ErrorCode::TooShort, "need at least 2 observations to difference");
    }
    Series out;
    out.unit = s.unit;
    out.variable = s.variable;
    out.differenced = true;
    out.values = s.values.tail(s.values.size() - 1) - s.values.head(s.values.size() - 1);
    return out;
}

Series detrend_quadratic(const Series& s) {
    const long n = s.values.size();
    if (n < 4) {
        throw Error(ErrorCode::TooShort,
                    "quadratic detrend needs at least 4 observations, got " + std::to_string(n));
    }
    Eigen::MatrixXd X(n, 3);
    for (long t = 0; t < n; ++t) {
        const double td = static_cast<double>(t);
        X(t, 0) = 1.0;
        X(t, 1) = td;
        X(t, 2) = td * td;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 3) {
        throw Error(ErrorCode::RankDeficientTrend, "trend regressors are rank deficient");
    }
    const Eigen::VectorXd coef = qr.solve(s.values);
    Series out = s;
    out.values = s.values - X * coef;
    return out;
}

PanelDataset apply_transform(const PanelDataset& panel, const TransformSpec& spec) {
    PanelDataset out = panel;
    const auto targets =
        spec.targets.empty() ? panel.variable_names() : spec.targets;
    if (spec.kind == TransformKind::FirstDifference) {
        out.years.assign(panel.years.begin() + 1, panel.years.end());
        out.variables.clear();
    }
    for (const auto& name : targets) {
        const Eigen::MatrixXd& m = panel.variable(name);
        switch (spec.kind) {
            case TransformKind::Log: {
                if ((m.array() <= 0.0).any()) {
                    throw Error(ErrorCode::NonPositiveValue,
                                "variable '" + name + "' must be strictly positive for log");
                }
                out.variables[name] = m.array().log();
                break;
            }
            case TransformKind::FirstDifference: {
                out.variables[name] = m.rightCols(m.cols() - 1) - m.leftCols(m.cols() - 1);
                break;
            }
            case TransformKind::QuadraticDetrend: {
                Eigen::MatrixXd d(m.rows(), m.cols());
                for (long u = 0; u < m.rows(); ++u) {
                    Series s{panel.units[static_cast<std::size_t>(u)], name,
                             m.row(u).transpose(), false};
                    d.row(u) = detrend_quadratic(s).values.transpose();
                }
                out.variables[name] = d;
                break;
            }
            case TransformKind::PerCapitaPassthrough:
                out.variables[name] = m;
                break;
        }
    }
    out.validate();
    return out;
}

}  // namespace riskshare
