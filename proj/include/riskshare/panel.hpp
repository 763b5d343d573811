#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "riskshare/error.hpp"

namespace riskshare {

/// Balanced country x year x variable grid. Matrices are units x years; every
/// cell must be present and finite, years contiguous with step 1.
struct PanelDataset {
    std::vector<std::string> units;
    std::vector<int> years;
    std::map<std::string, Eigen::MatrixXd> variables;  // unit-major rows
    std::string source = "actual";  // actual | synthetic | simulated

    std::size_t n_units() const { return units.size(); }
    std::size_t n_years() const { return years.size(); }

    int unit_index(const std::string& unit) const;
    int year_index(int year) const;
    bool has_variable(const std::string& name) const;
    const Eigen::MatrixXd& variable(const std::string& name) const;
    double cell(const std::string& unit, int year, const std::string& var) const;

    std::vector<std::string> variable_names() const;

    /// Throws unless the grid is balanced, finite, and years are contiguous.
    void validate() const;

    /// Sub-panel restricted to the given units (order preserved as given).
    PanelDataset select_units(const std::vector<std::string>& keep) const;
    /// Sub-panel restricted to years in [first, last].
    PanelDataset select_years(int first, int last) const;
};

/// One unit's trajectory for one variable, aligned to the dataset years.
/// `differenced` marks a series one year shorter than its source, aligned to
/// the later year of each pair.
struct Series {
    std::string unit;
    std::string variable;
    Eigen::VectorXd values;
    bool differenced = false;
};

enum class TransformKind { Log, FirstDifference, QuadraticDetrend, PerCapitaPassthrough };

struct TransformSpec {
    TransformKind kind;
    std::vector<std::string> targets;
};

enum class CsvFormat { LongCsv, WideCsv };

/// Reads a UTF-8 comma-separated file with a mandatory header. Long layout:
/// unit,year,variable,value. Wide layout: unit,year,<one column per variable>.
/// Rejects unbalanced panels, duplicate cells, and non-contiguous years.
PanelDataset load_panel(const std::string& path, CsvFormat format);

/// Writes a panel in either layout; values as plain decimals with 12
/// significant digits. write(load(x)) round-trips cell-for-cell. A non-empty
/// trailing_comment is appended as a final `# ...` line (loaders skip comment
/// lines), which is how pipeline outputs embed their config hash.
void write_panel(const PanelDataset& panel, const std::string& path, CsvFormat format,
                 const std::string& trailing_comment = "");

/// Natural log of a strictly positive series.
Series log_series(const Series& s);

/// output[t] = input[t+1] - input[t]; sets the differenced marker.
Series first_differences(const Series& s);

/// Residuals of an OLS fit on (1, t, t^2), t = 0..T-1. Residuals are
/// orthogonal to each trend regressor.
Series detrend_quadratic(const Series& s);

/// Applies a transform to the named variables, returning a new panel.
/// FirstDifference shortens the year axis by one.
PanelDataset apply_transform(const PanelDataset& panel, const TransformSpec& spec);

}  // namespace riskshare
