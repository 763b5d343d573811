#include "riskshare/regress.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskshare/format.hpp"
#include "riskshare/stats.hpp"

namespace riskshare {

namespace {

std::string format_level(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace

void DataTable::validate() const {
    const std::size_t n_rows = unit.size();
    if (year.size() != n_rows || cluster.size() != n_rows) {
        throw Error(ErrorCode::DimensionMismatch, "table tag vectors have differing lengths");
    }
    for (const auto& [name, col] : cols) {
        if (static_cast<std::size_t>(col.size()) != n_rows) {
            throw Error(ErrorCode::DimensionMismatch,
                        "column '" + name + "' length differs from table rows");
        }
    }
}

int DesignMatrix::column_index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error(ErrorCode::UnknownVariable, "no design column named '" + name + "'");
    }
    return static_cast<int>(it - names.begin());
}

DesignMatrix build_design(const DataTable& table, const Formula& formula) {
    table.validate();
    const long n = table.n();
    if (n == 0) throw Error(ErrorCode::DegenerateSubsample, "no observations");

    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> columns;

    if (formula.intercept) {
        names.emplace_back("const");
        columns.emplace_back(Eigen::VectorXd::Ones(n));
    }
    for (const auto& term : formula.terms) {
        Eigen::VectorXd col = Eigen::VectorXd::Ones(n);
        std::string name;
        for (const auto& var : term) {
            const auto it = table.cols.find(var);
            if (it == table.cols.end()) {
                throw Error(ErrorCode::UnknownVariable, "term references unknown column '" + var + "'");
            }
            col = col.cwiseProduct(it->second);
            name = name.empty() ? var : name + ":" + var;
        }
        names.push_back(name);
        columns.push_back(std::move(col));
    }

    if (formula.year_dummies) {
        std::vector<int> year_levels(table.year.begin(), table.year.end());
        std::sort(year_levels.begin(), year_levels.end());
        year_levels.erase(std::unique(year_levels.begin(), year_levels.end()), year_levels.end());

        if (formula.group_column.empty()) {
            // drop the first year level
            for (std::size_t l = 1; l < year_levels.size(); ++l) {
                Eigen::VectorXd col(n);
                for (long r = 0; r < n; ++r) col[r] = table.year[r] == year_levels[l] ? 1.0 : 0.0;
                names.push_back("year_" + std::to_string(year_levels[l]));
                columns.push_back(std::move(col));
            }
        } else {
            const auto it = table.cols.find(formula.group_column);
            if (it == table.cols.end()) {
                throw Error(ErrorCode::UnknownVariable,
                            "group column '" + formula.group_column + "' not in table");
            }
            const Eigen::VectorXd& g = it->second;
            std::vector<double> group_levels(g.data(), g.data() + g.size());
            std::sort(group_levels.begin(), group_levels.end());
            group_levels.erase(std::unique(group_levels.begin(), group_levels.end()),
                               group_levels.end());
            // group main effects (first group dropped) keep the stacked fit
            // equivalent to separate per-group regressions
            for (std::size_t l = 1; l < group_levels.size(); ++l) {
                Eigen::VectorXd col(n);
                for (long r = 0; r < n; ++r) col[r] = g[r] == group_levels[l] ? 1.0 : 0.0;
                names.push_back(formula.group_column + "_" + format_level(group_levels[l]));
                columns.push_back(std::move(col));
            }
            for (const double gl : group_levels) {
                for (std::size_t l = 1; l < year_levels.size(); ++l) {
                    Eigen::VectorXd col(n);
                    for (long r = 0; r < n; ++r) {
                        col[r] = (g[r] == gl && table.year[r] == year_levels[l]) ? 1.0 : 0.0;
                    }
                    names.push_back(formula.group_column + "_" + format_level(gl) + ":year_" +
                                    std::to_string(year_levels[l]));
                    columns.push_back(std::move(col));
                }
            }
        }
    }

    DesignMatrix design;
    design.names = std::move(names);
    design.unit = table.unit;
    design.year = table.year;
    design.cluster = table.cluster;
    design.X.resize(n, static_cast<long>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) design.X.col(static_cast<long>(c)) = columns[c];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < design.X.cols()) {
        throw Error(ErrorCode::CollinearAfterDummies,
                    "design is rank " + std::to_string(qr.rank()) + " with " +
                        std::to_string(design.X.cols()) + " columns over " +
                        std::to_string(design.X.rows()) + " rows");
    }
    return design;
}

RegressionFit ols_fit(const Eigen::VectorXd& y, const DesignMatrix& design, const VcovSpec& spec) {
    const long n = design.X.rows();
    const long k = design.X.cols();
    if (y.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "y length differs from design rows");
    }
    if (n <= k) {
        throw Error(ErrorCode::RankDeficient, "more parameters than observations");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < k) {
        throw Error(ErrorCode::RankDeficient, "design matrix is rank deficient");
    }

    RegressionFit fit;
    fit.names = design.names;
    fit.coef = qr.solve(y);
    fit.residuals = y - design.X * fit.coef;
    fit.n_obs = n;
    fit.n_params = k;
    fit.df_residual = n - k;
    fit.vcov_kind = spec.kind;
    fit.small_sample = spec.small_sample;

    // (X'X)^-1 from the pivoted QR factor: X P = Q R.
    const Eigen::MatrixXd r_factor =
        qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r_factor.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd perm = qr.colsPermutation();
    const Eigen::MatrixXd xtx_inv = perm * r_inv * r_inv.transpose() * perm.transpose();

    const double ssr = fit.residuals.squaredNorm();
    const double sigma2 = ssr / static_cast<double>(n - k);

    switch (spec.kind) {
        case VcovKind::Homoskedastic: {
            fit.vcov = sigma2 * xtx_inv;
            break;
        }
        case VcovKind::Clustered: {
            std::map<std::string, std::vector<long>> groups;
            for (long r = 0; r < n; ++r) groups[design.cluster[r]].push_back(r);
            const long g_count = static_cast<long>(groups.size());
            if (g_count < 2) {
                throw Error(ErrorCode::TooFewClusters,
                            "clustered errors need at least 2 clusters, got " +
                                std::to_string(g_count));
            }
            Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
            for (const auto& [_, rows] : groups) {
                Eigen::VectorXd score = Eigen::VectorXd::Zero(k);
                for (const long r : rows) score += design.X.row(r).transpose() * fit.residuals[r];
                meat += score * score.transpose();
            }
            double factor = 1.0;
            if (spec.small_sample) {
                factor = (static_cast<double>(g_count) / static_cast<double>(g_count - 1)) *
                         (static_cast<double>(n - 1) / static_cast<double>(n - k));
            }
            fit.vcov = factor * xtx_inv * meat * xtx_inv;
            fit.n_clusters = g_count;
            break;
        }
        case VcovKind::PanelCorrected: {
            std::map<std::string, int> unit_ids;
            std::map<int, int> year_ids;
            for (long r = 0; r < n; ++r) {
                unit_ids.emplace(design.unit[r], static_cast<int>(unit_ids.size()));
                year_ids.emplace(design.year[r], static_cast<int>(year_ids.size()));
            }
            const long n_units = static_cast<long>(unit_ids.size());
            const long n_years = static_cast<long>(year_ids.size());
            if (n != n_units * n_years) {
                throw Error(ErrorCode::UnbalancedForPcse,
                            "panel-corrected errors need a balanced (unit, year) grid");
            }
            Eigen::MatrixXd resid_grid(n_units, n_years);
            Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n_units, n_years);
            std::vector<std::pair<int, int>> row_pos(n);
            for (long r = 0; r < n; ++r) {
                const int u = unit_ids[design.unit[r]];
                const int t = year_ids[design.year[r]];
                if (seen(u, t)++) {
                    throw Error(ErrorCode::UnbalancedForPcse,
                                "duplicate (unit, year) cell in panel-corrected grid");
                }
                resid_grid(u, t) = fit.residuals[r];
                row_pos[r] = {u, t};
            }
            if (n_years < n_units) {
                throw Error(ErrorCode::UnbalancedForPcse,
                            "panel-corrected errors need at least as many periods as units (" +
                                std::to_string(n_years) + " < " + std::to_string(n_units) + ")");
            }
            const Eigen::MatrixXd sigma =
                resid_grid * resid_grid.transpose() / static_cast<double>(n_years);
            // X' Omega X with Omega[r,s] = Sigma(u_r, u_s) 1{t_r == t_s}
            std::vector<std::vector<long>> by_year(n_years);
            for (long r = 0; r < n; ++r) by_year[row_pos[r].second].push_back(r);
            Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(k, k);
            for (const auto& rows : by_year) {
                Eigen::MatrixXd xt(static_cast<long>(rows.size()), k);
                Eigen::MatrixXd sig(static_cast<long>(rows.size()), rows.size());
                for (std::size_t a = 0; a < rows.size(); ++a) {
                    xt.row(static_cast<long>(a)) = design.X.row(rows[a]);
                    for (std::size_t b = 0; b < rows.size(); ++b) {
                        sig(static_cast<long>(a), static_cast<long>(b)) =
                            sigma(row_pos[rows[a]].first, row_pos[rows[b]].first);
                    }
                }
                middle += xt.transpose() * sig * xt;
            }
            fit.vcov = xtx_inv * middle * xtx_inv;
            break;
        }
    }
    fit.vcov = ((fit.vcov + fit.vcov.transpose()) / 2.0).eval();

    const double y_mean = y.mean();
    const double tss = (y.array() - y_mean).square().sum();
    fit.r_squared = tss > 0.0 ? 1.0 - ssr / tss : 1.0;
    return fit;
}

double RegressionFit::coefficient(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error(ErrorCode::UnknownVariable, "no coefficient named '" + name + "'");
    }
    return coef[it - names.begin()];
}

double RegressionFit::std_error(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error(ErrorCode::UnknownVariable, "no coefficient named '" + name + "'");
    }
    const long i = it - names.begin();
    return std::sqrt(std::max(0.0, vcov(i, i)));
}

double RegressionFit::t_statistic(const std::string& name) const {
    const double se = std_error(name);
    if (se == 0.0) return 0.0;
    return coefficient(name) / se;
}

double RegressionFit::inference_df() const {
    if (vcov_kind == VcovKind::Clustered && n_clusters > 1) {
        return static_cast<double>(n_clusters - 1);
    }
    return static_cast<double>(df_residual);
}

double RegressionFit::p_value(const std::string& name) const {
    return student_t_pvalue(t_statistic(name), inference_df());
}

std::string fit_to_json(const RegressionFit& fit) {
    nlohmann::json out;
    out["n_obs"] = fit.n_obs;
    out["df_residual"] = fit.df_residual;
    out["r_squared"] = round_sig12(fit.r_squared);
    switch (fit.vcov_kind) {
        case VcovKind::Homoskedastic: out["vcov"] = "homoskedastic"; break;
        case VcovKind::Clustered: out["vcov"] = "clustered"; break;
        case VcovKind::PanelCorrected: out["vcov"] = "panel_corrected"; break;
    }
    if (fit.vcov_kind == VcovKind::Clustered) {
        out["n_clusters"] = fit.n_clusters;
        out["small_sample"] = fit.small_sample;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& name : fit.names) {
        nlohmann::json row;
        row["name"] = name;
        row["estimate"] = round_sig12(fit.coefficient(name));
        row["std_error"] = round_sig12(fit.std_error(name));
        row["t"] = round_sig12(fit.t_statistic(name));
        row["p"] = round_sig12(fit.p_value(name));
        rows.push_back(row);
    }
    out["coefficients"] = rows;
    return out.dump(2);
}

}  // namespace riskshare
