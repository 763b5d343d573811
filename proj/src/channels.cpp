#include "riskshare/channels.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace riskshare {

const std::array<std::string, kNumChannels> kChannelNames = {
    "capital_markets", "international_transfers", "public_savings", "private_savings",
    "unsmoothed"};

const std::string ChannelData::kRegressor = "dlog_gdp";

std::string ChannelData::lhs_name(int channel) { return "lhs_" + std::to_string(channel); }

void ChannelSpec::validate() const {
    if (channels.empty()) {
        throw Error(ErrorCode::DegenerateSubsample, "channel subset is empty");
    }
    std::set<int> seen;
    for (const int c : channels) {
        if (c < 0 || c >= kNumChannels) {
            throw Error(ErrorCode::UnknownVariable, "channel index out of range");
        }
        if (!seen.insert(c).second) {
            throw Error(ErrorCode::DuplicateCell, "channel listed twice");
        }
    }
}

ChannelData build_channel_lhs(const PanelDataset& panel) {
    panel.validate();
    static const char* kRequired[] = {"GDP", "C", "G", "NI", "DNI"};
    for (const char* name : kRequired) {
        const Eigen::MatrixXd& m = panel.variable(name);
        if ((m.array() <= 0.0).any()) {
            throw Error(ErrorCode::NonPositiveValue,
                        std::string(name) + " must be strictly positive for the log transform");
        }
    }
    if (panel.n_years() < 2) {
        throw Error(ErrorCode::TooShort, "need at least 2 years to difference");
    }

    const Eigen::MatrixXd& gdp = panel.variable("GDP");
    const Eigen::MatrixXd& c = panel.variable("C");
    const Eigen::MatrixXd& g = panel.variable("G");
    const Eigen::MatrixXd& ni = panel.variable("NI");
    const Eigen::MatrixXd& dni = panel.variable("DNI");

    const long n_units = static_cast<long>(panel.n_units());
    const long n_diff = static_cast<long>(panel.n_years()) - 1;
    const long rows = n_units * n_diff;

    ChannelData data;
    data.table.unit.reserve(rows);
    data.table.year.reserve(rows);
    data.table.cluster.reserve(rows);
    Eigen::VectorXd x(rows);
    std::array<Eigen::VectorXd, kNumChannels> lhs;
    for (auto& v : lhs) v.resize(rows);

    long r = 0;
    for (long u = 0; u < n_units; ++u) {
        for (long t = 1; t <= n_diff; ++t) {
            const auto dlog = [&](const Eigen::MatrixXd& m) {
                return std::log(m(u, t)) - std::log(m(u, t - 1));
            };
            const double d_gdp = dlog(gdp);
            const double d_ni = dlog(ni);
            const double d_dni = dlog(dni);
            const double d_dni_g =
                std::log(dni(u, t) + g(u, t)) - std::log(dni(u, t - 1) + g(u, t - 1));
            const double d_c_g = std::log(c(u, t) + g(u, t)) - std::log(c(u, t - 1) + g(u, t - 1));

            x[r] = d_gdp;
            lhs[0][r] = d_gdp - d_ni;
            lhs[1][r] = d_ni - d_dni;
            lhs[2][r] = d_dni - d_dni_g;
            lhs[3][r] = d_dni_g - d_c_g;
            lhs[4][r] = d_c_g;

            data.table.unit.push_back(panel.units[static_cast<std::size_t>(u)]);
            data.table.year.push_back(panel.years[static_cast<std::size_t>(t)]);
            data.table.cluster.push_back(panel.units[static_cast<std::size_t>(u)]);
            ++r;
        }
    }
    data.table.cols.emplace(ChannelData::kRegressor, std::move(x));
    for (int k = 0; k < kNumChannels; ++k) {
        data.table.cols.emplace(ChannelData::lhs_name(k), std::move(lhs[static_cast<std::size_t>(k)]));
    }
    return data;
}

double ChannelDecomposition::sum_betas() const {
    double s = 0.0;
    for (const auto& e : estimates) s += e.beta;
    return s;
}

ChannelDecomposition channel_decomposition(const PanelDataset& panel, const ChannelSpec& spec,
                                           const VcovSpec& vcov) {
    spec.validate();
    const ChannelData data = build_channel_lhs(panel);

    Formula formula;
    formula.terms = {{ChannelData::kRegressor}};
    formula.year_dummies = true;
    const DesignMatrix design = build_design(data.table, formula);

    ChannelDecomposition out;
    out.vcov_kind = vcov.kind;
    out.sample = panel.source;
    for (const int k : spec.channels) {
        const RegressionFit fit = ols_fit(data.table.cols.at(ChannelData::lhs_name(k)), design, vcov);
        ChannelEstimate est;
        est.channel = kChannelNames[static_cast<std::size_t>(k)];
        est.beta = fit.coefficient(ChannelData::kRegressor);
        est.se = fit.std_error(ChannelData::kRegressor);
        est.r_squared = fit.r_squared;
        est.n_obs = fit.n_obs;
        out.estimates.push_back(est);
    }
    return out;
}

namespace {

void require_matching_grids(const PanelDataset& actual, const PanelDataset& synthetic) {
    if (actual.years != synthetic.years) {
        throw Error(ErrorCode::GridMismatch, "actual and synthetic year grids differ");
    }
    std::set<std::string> a(actual.units.begin(), actual.units.end());
    std::set<std::string> s(synthetic.units.begin(), synthetic.units.end());
    if (a != s) {
        throw Error(ErrorCode::GridMismatch, "actual and synthetic unit sets differ");
    }
}

/// Stacks the channel data of the actual (tr=1) and synthetic (tr=0) panels.
/// Pseudo-unit tags keep rows distinct; clusters stay at the country level so
/// a unit clusters with its own counterfactual.
DataTable stack_channel_tables(const ChannelData& actual, const ChannelData& synthetic,
                               int treatment_year) {
    DataTable out;
    const auto append = [&](const DataTable& t, double tr, const char* suffix) {
        const long n = t.n();
        for (long r = 0; r < n; ++r) {
            out.unit.push_back(t.unit[static_cast<std::size_t>(r)] + suffix);
            out.year.push_back(t.year[static_cast<std::size_t>(r)]);
            out.cluster.push_back(t.cluster[static_cast<std::size_t>(r)]);
        }
        for (const auto& [name, col] : t.cols) {
            auto& dst = out.cols[name];
            const long old = dst.size();
            dst.conservativeResize(old + n);
            dst.tail(n) = col;
        }
        auto& trcol = out.cols["tr"];
        const long old = trcol.size();
        trcol.conservativeResize(old + n);
        trcol.tail(n).setConstant(tr);
    };
    append(synthetic.table, 0.0, "_syn");
    append(actual.table, 1.0, "_act");

    Eigen::VectorXd post(out.n());
    for (long r = 0; r < out.n(); ++r) {
        post[r] = out.year[static_cast<std::size_t>(r)] >= treatment_year ? 1.0 : 0.0;
    }
    out.cols["post"] = post;
    out.validate();
    return out;
}

DataTable drop_years(const DataTable& t, const std::vector<int>& exclude) {
    if (exclude.empty()) return t;
    std::set<int> drop(exclude.begin(), exclude.end());
    DataTable out;
    std::vector<long> keep;
    for (long r = 0; r < t.n(); ++r) {
        if (!drop.count(t.year[static_cast<std::size_t>(r)])) keep.push_back(r);
    }
    for (const long r : keep) {
        out.unit.push_back(t.unit[static_cast<std::size_t>(r)]);
        out.year.push_back(t.year[static_cast<std::size_t>(r)]);
        out.cluster.push_back(t.cluster[static_cast<std::size_t>(r)]);
    }
    for (const auto& [name, col] : t.cols) {
        Eigen::VectorXd sub(static_cast<long>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) sub[static_cast<long>(i)] = col[keep[i]];
        out.cols[name] = std::move(sub);
    }
    return out;
}

void require_four_cells(const DataTable& t) {
    const Eigen::VectorXd& tr = t.cols.at("tr");
    const Eigen::VectorXd& post = t.cols.at("post");
    int counts[2][2] = {{0, 0}, {0, 0}};
    for (long r = 0; r < t.n(); ++r) {
        counts[tr[r] > 0.5 ? 1 : 0][post[r] > 0.5 ? 1 : 0]++;
    }
    static const char* group_name[2] = {"synthetic", "actual"};
    static const char* period_name[2] = {"pre", "post"};
    for (int g = 0; g < 2; ++g) {
        for (int p = 0; p < 2; ++p) {
            if (counts[g][p] == 0) {
                throw Error(ErrorCode::DegenerateSubsample,
                            std::string(period_name[p]) + "/" + group_name[g] +
                                " cell has no observations");
            }
        }
    }
}

DidCell cell_from_fit(const RegressionFit& fit, const std::string& name) {
    DidCell c;
    c.estimate = fit.coefficient(name);
    c.se = fit.std_error(name);
    c.p_value = fit.p_value(name);
    return c;
}

}  // namespace

std::array<double, 4> DidTable::column_sums() const {
    std::array<double, 4> sums{0.0, 0.0, 0.0, 0.0};
    for (const auto& ch : channels) {
        for (int b = 0; b < 4; ++b) sums[static_cast<std::size_t>(b)] += ch.beta[static_cast<std::size_t>(b)].estimate;
    }
    return sums;
}

DidTable did_decomposition(const PanelDataset& actual, const PanelDataset& synthetic,
                           int treatment_year, const DidOptions& options) {
    options.spec.validate();
    require_matching_grids(actual, synthetic);
    if (treatment_year <= actual.years.front() || treatment_year > actual.years.back()) {
        throw Error(ErrorCode::DegenerateSubsample,
                    "treatment year must lie strictly inside the year range");
    }

    const ChannelData lhs_actual = build_channel_lhs(actual);
    const ChannelData lhs_synth = build_channel_lhs(synthetic);
    DataTable stacked = stack_channel_tables(lhs_actual, lhs_synth, treatment_year);
    stacked = drop_years(stacked, options.exclude_years);
    require_four_cells(stacked);

    Formula formula;
    const std::string x = ChannelData::kRegressor;
    formula.terms = {{x}, {"tr", x}, {"post", x}, {"tr", "post", x}};
    formula.year_dummies = true;
    if (options.fe_mode == FeMode::GroupSpecific) formula.group_column = "tr";
    const DesignMatrix design = build_design(stacked, formula);

    DidTable out;
    out.fe_mode = options.fe_mode;
    out.vcov_kind = options.vcov.kind;
    out.treatment_year = treatment_year;
    for (const int k : options.spec.channels) {
        const RegressionFit fit =
            ols_fit(stacked.cols.at(ChannelData::lhs_name(k)), design, options.vcov);
        DidChannelResult ch;
        ch.channel = kChannelNames[static_cast<std::size_t>(k)];
        ch.beta[0] = cell_from_fit(fit, x);
        ch.beta[1] = cell_from_fit(fit, "tr:" + x);
        ch.beta[2] = cell_from_fit(fit, "post:" + x);
        ch.beta[3] = cell_from_fit(fit, "tr:post:" + x);
        ch.r_squared = fit.r_squared;
        ch.n_obs = fit.n_obs;
        out.channels.push_back(ch);
    }
    return out;
}

BeforeAfterResult before_after(const PanelDataset& panel, int treatment_year,
                               const ChannelSpec& spec, const VcovSpec& vcov) {
    spec.validate();
    if (treatment_year <= panel.years.front() || treatment_year > panel.years.back()) {
        throw Error(ErrorCode::DegenerateSubsample,
                    "treatment year must lie strictly inside the year range");
    }
    const ChannelData data = build_channel_lhs(panel);
    DataTable table = data.table;
    Eigen::VectorXd post(table.n());
    for (long r = 0; r < table.n(); ++r) {
        post[r] = table.year[static_cast<std::size_t>(r)] >= treatment_year ? 1.0 : 0.0;
    }
    table.cols["post"] = post;

    Formula formula;
    const std::string x = ChannelData::kRegressor;
    formula.terms = {{x}, {"post", x}};
    formula.year_dummies = true;
    const DesignMatrix design = build_design(table, formula);

    BeforeAfterResult out;
    out.treatment_year = treatment_year;
    for (const int k : spec.channels) {
        const RegressionFit fit = ols_fit(table.cols.at(ChannelData::lhs_name(k)), design, vcov);
        BeforeAfterChannel ch;
        ch.channel = kChannelNames[static_cast<std::size_t>(k)];
        ch.gamma1 = cell_from_fit(fit, x);
        ch.gamma2 = cell_from_fit(fit, "post:" + x);
        ch.r_squared = fit.r_squared;
        ch.n_obs = fit.n_obs;
        out.channels.push_back(ch);
    }
    return out;
}

TrendTestResult parallel_trend_test(const PanelDataset& actual, const PanelDataset& synthetic,
                                    int treatment_year, const ChannelSpec& spec,
                                    const VcovSpec& vcov) {
    spec.validate();
    require_matching_grids(actual, synthetic);
    int pre_years = 0;
    for (const int y : actual.years) {
        if (y < treatment_year) ++pre_years;
    }
    if (pre_years < 3) {
        throw Error(ErrorCode::TooShortPre,
                    "parallel trend test needs at least 3 pre-treatment years, got " +
                        std::to_string(pre_years));
    }

    const ChannelData lhs_actual = build_channel_lhs(actual);
    const ChannelData lhs_synth = build_channel_lhs(synthetic);
    DataTable stacked = stack_channel_tables(lhs_actual, lhs_synth, treatment_year);

    std::vector<long> keep;
    for (long r = 0; r < stacked.n(); ++r) {
        if (stacked.year[static_cast<std::size_t>(r)] < treatment_year) keep.push_back(r);
    }
    DataTable pre;
    for (const long r : keep) {
        pre.unit.push_back(stacked.unit[static_cast<std::size_t>(r)]);
        pre.year.push_back(stacked.year[static_cast<std::size_t>(r)]);
        pre.cluster.push_back(stacked.cluster[static_cast<std::size_t>(r)]);
    }
    for (const auto& [name, col] : stacked.cols) {
        Eigen::VectorXd sub(static_cast<long>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) sub[static_cast<long>(i)] = col[keep[i]];
        pre.cols[name] = std::move(sub);
    }
    // trend variable centered on the first differenced observation, so a pure
    // differential slope maps onto the year x treated coefficient directly
    int origin = pre.year.front();
    for (const int y : pre.year) origin = std::min(origin, y);
    Eigen::VectorXd year_col(pre.n());
    for (long r = 0; r < pre.n(); ++r) {
        year_col[r] = static_cast<double>(pre.year[static_cast<std::size_t>(r)] - origin);
    }
    pre.cols["year_t"] = year_col;

    Formula formula;
    const std::string x = ChannelData::kRegressor;
    formula.terms = {{"year_t"}, {"year_t", "tr"}, {x}, {"year_t", x}, {"year_t", "tr", x}};
    const DesignMatrix design = build_design(pre, formula);

    TrendTestResult out;
    for (const int k : spec.channels) {
        const RegressionFit fit = ols_fit(pre.cols.at(ChannelData::lhs_name(k)), design, vcov);
        TrendTestChannel ch;
        ch.channel = kChannelNames[static_cast<std::size_t>(k)];
        ch.beta2 = cell_from_fit(fit, "year_t:tr");
        ch.beta5 = cell_from_fit(fit, "year_t:tr:" + x);
        out.channels.push_back(ch);
        out.n_obs = fit.n_obs;
    }
    return out;
}

GrowthVarianceTable growth_variance_did(const PanelDataset& actual,
                                        const PanelDataset& synthetic, int treatment_year,
                                        const VcovSpec& vcov) {
    require_matching_grids(actual, synthetic);
    int pre_count = 0;
    int post_count = 0;
    for (const int y : actual.years) {
        (y < treatment_year ? pre_count : post_count)++;
    }
    if (pre_count < 4 || post_count < 4) {
        throw Error(ErrorCode::TooShortCell,
                    "growth/variance DiD needs at least 4 years in each period");
    }

    DataTable growth;
    DataTable varcell;
    const auto add_group = [&](const PanelDataset& panel, double tr, const char* suffix) {
        const Eigen::MatrixXd& gdp = panel.variable("GDP");
        if ((gdp.array() <= 0.0).any()) {
            throw Error(ErrorCode::NonPositiveValue, "GDP must be strictly positive");
        }
        for (std::size_t u = 0; u < panel.n_units(); ++u) {
            Series s{panel.units[u], "GDP",
                     gdp.row(static_cast<long>(u)).transpose().array().log(), false};
            const Series detrended = detrend_quadratic(s);
            // observation-level growth of the detrended series
            for (std::size_t t = 1; t < panel.n_years(); ++t) {
                growth.unit.push_back(panel.units[u] + suffix);
                growth.year.push_back(panel.years[t]);
                growth.cluster.push_back(panel.units[u]);
                growth.cols["y"].conservativeResize(growth.n());
                growth.cols["y"][growth.n() - 1] =
                    detrended.values[static_cast<long>(t)] - detrended.values[static_cast<long>(t) - 1];
                growth.cols["tr"].conservativeResize(growth.n());
                growth.cols["tr"][growth.n() - 1] = tr;
                growth.cols["post"].conservativeResize(growth.n());
                growth.cols["post"][growth.n() - 1] =
                    panel.years[t] >= treatment_year ? 1.0 : 0.0;
            }
            // one log-variance observation per period cell
            for (int period = 0; period < 2; ++period) {
                std::vector<double> cell_values;
                for (std::size_t t = 0; t < panel.n_years(); ++t) {
                    const bool post = panel.years[t] >= treatment_year;
                    if (post == (period == 1)) {
                        cell_values.push_back(detrended.values[static_cast<long>(t)]);
                    }
                }
                double m = 0.0;
                for (double v : cell_values) m += v;
                m /= static_cast<double>(cell_values.size());
                double var = 0.0;
                for (double v : cell_values) var += (v - m) * (v - m);
                var /= static_cast<double>(cell_values.size() - 1);
                varcell.unit.push_back(panel.units[u] + suffix);
                varcell.year.push_back(period);
                varcell.cluster.push_back(panel.units[u]);
                varcell.cols["y"].conservativeResize(varcell.n());
                varcell.cols["y"][varcell.n() - 1] = std::log(var);
                varcell.cols["tr"].conservativeResize(varcell.n());
                varcell.cols["tr"][varcell.n() - 1] = tr;
                varcell.cols["post"].conservativeResize(varcell.n());
                varcell.cols["post"][varcell.n() - 1] = period;
            }
        }
    };
    add_group(synthetic, 0.0, "_syn");
    add_group(actual, 1.0, "_act");

    Formula formula;
    formula.terms = {{"tr"}, {"post"}, {"tr", "post"}};
    const DesignMatrix growth_design = build_design(growth, formula);
    const RegressionFit growth_fit = ols_fit(growth.cols.at("y"), growth_design, vcov);
    const DesignMatrix var_design = build_design(varcell, formula);
    const RegressionFit var_fit = ols_fit(varcell.cols.at("y"), var_design, vcov);

    GrowthVarianceTable out;
    static const struct {
        const char* cell;
        const char* name;
    } kRows[] = {{"pre_synthetic", "const"},
                 {"pre_actual", "tr"},
                 {"post_synthetic", "post"},
                 {"post_actual", "tr:post"}};
    for (const auto& row : kRows) {
        GrowthVarianceRow r;
        r.cell = row.cell;
        r.growth = cell_from_fit(growth_fit, row.name);
        r.variance = cell_from_fit(var_fit, row.name);
        out.rows.push_back(r);
    }
    out.n_growth_obs = growth_fit.n_obs;
    out.n_variance_obs = var_fit.n_obs;
    out.growth_r_squared = growth_fit.r_squared;
    out.variance_r_squared = var_fit.r_squared;
    return out;
}

}  // namespace riskshare
