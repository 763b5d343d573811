#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "riskshare/error.hpp"

namespace riskshare {

/// Column-oriented observation table feeding the design builder. Numeric
/// variables (including 0/1 indicators) live in `cols`; unit / year / cluster
/// tags ride along for fixed effects and covariance estimators.
struct DataTable {
    std::vector<std::string> unit;
    std::vector<int> year;
    std::vector<std::string> cluster;
    std::map<std::string, Eigen::VectorXd> cols;

    long n() const { return static_cast<long>(unit.size()); }
    void validate() const;
};

/// Formula description. Columns are laid out deterministically: intercept,
/// product terms in declaration order, then dummy blocks (first level
/// dropped). A term is a product of named numeric columns.
struct Formula {
    bool intercept = true;
    std::vector<std::vector<std::string>> terms;
    bool year_dummies = false;
    /// When set together with year_dummies, emits one dummy block per group
    /// level (group x year, first year dropped within each group) plus the
    /// group main-effect dummies (first group dropped), which makes the
    /// stacked fit equivalent to separate per-group regressions.
    std::string group_column;
};

struct DesignMatrix {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    std::vector<std::string> unit;
    std::vector<int> year;
    std::vector<std::string> cluster;

    long rows() const { return X.rows(); }
    long cols() const { return X.cols(); }
    int column_index(const std::string& name) const;
};

enum class VcovKind { Homoskedastic, Clustered, PanelCorrected };

struct VcovSpec {
    VcovKind kind = VcovKind::Clustered;
    /// Small-sample factor [G/(G-1)]*[(N-1)/(N-K)] on the clustered sandwich.
    bool small_sample = true;
};

struct RegressionFit {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::MatrixXd vcov;
    Eigen::VectorXd residuals;
    long n_obs = 0;
    long n_params = 0;
    long df_residual = 0;
    long n_clusters = 0;
    VcovKind vcov_kind = VcovKind::Homoskedastic;
    bool small_sample = false;
    double r_squared = 0.0;

    double coefficient(const std::string& name) const;
    double std_error(const std::string& name) const;
    double t_statistic(const std::string& name) const;
    /// Two-sided p-value; t distribution with G-1 df under clustering,
    /// N-K otherwise.
    double p_value(const std::string& name) const;
    double inference_df() const;
};

/// Materializes the design: intercept, terms in order, dummy blocks with the
/// first level dropped. Throws UnknownVariable / CollinearAfterDummies.
DesignMatrix build_design(const DataTable& table, const Formula& formula);

/// OLS through a rank-revealing QR (no explicit inversion of X'X for the
/// solve). Covariance estimators:
///   homoskedastic      sigma^2 (X'X)^-1
///   clustered          (X'X)^-1 [sum_g X_g'u_g u_g'X_g] (X'X)^-1, optionally
///                      scaled by G/(G-1)*(N-1)/(N-K)
///   panel-corrected    (X'X)^-1 X' (Sigma (x) I_T) X (X'X)^-1 with Sigma the
///                      contemporaneous cross-unit residual covariance of a
///                      balanced (unit, year) grid
RegressionFit ols_fit(const Eigen::VectorXd& y, const DesignMatrix& X, const VcovSpec& vcov);

/// Coefficient table as JSON text: name, estimate, std error, t statistic,
/// p-value, 12 significant digits.
std::string fit_to_json(const RegressionFit& fit);

}  // namespace riskshare
