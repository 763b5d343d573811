#include "riskshare/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "riskshare/parallel.hpp"
#include "riskshare/rng.hpp"

namespace riskshare {

namespace {

/// Variables a single-channel stacked DiD needs (the regressor GDP plus the
/// accounts entering that channel's left-hand side).
std::vector<std::string> channel_variables(int channel) {
    switch (channel) {
        case 0: return {"GDP", "NI"};
        case 1: return {"GDP", "NI", "DNI"};
        case 2: return {"GDP", "DNI", "G"};
        case 3: return {"GDP", "DNI", "G", "C"};
        case 4: return {"GDP", "C", "G"};
        default: throw Error(ErrorCode::UnknownVariable, "channel index out of range");
    }
}

double channel_lhs_value(int channel, const std::map<std::string, std::pair<double, double>>& v) {
    const auto dlog = [&](const char* name) {
        const auto& p = v.at(name);
        if (p.first <= 0.0 || p.second <= 0.0) {
            throw Error(ErrorCode::NonPositiveValue,
                        std::string(name) + " must be strictly positive");
        }
        return std::log(p.second) - std::log(p.first);
    };
    const auto dlog_sum = [&](const char* a, const char* b) {
        const auto& pa = v.at(a);
        const auto& pb = v.at(b);
        const double prev = pa.first + pb.first;
        const double cur = pa.second + pb.second;
        if (prev <= 0.0 || cur <= 0.0) {
            throw Error(ErrorCode::NonPositiveValue, "aggregate must be strictly positive");
        }
        return std::log(cur) - std::log(prev);
    };
    switch (channel) {
        case 0: return dlog("GDP") - dlog("NI");
        case 1: return dlog("NI") - dlog("DNI");
        case 2: return dlog("DNI") - dlog_sum("DNI", "G");
        case 3: return dlog_sum("DNI", "G") - dlog_sum("C", "G");
        case 4: return dlog_sum("C", "G");
        default: throw Error(ErrorCode::UnknownVariable, "channel index out of range");
    }
}

/// One pseudo-assignment: units with multiplicity; duplicates become distinct
/// pseudo-units with distinct cluster ids.
struct Assignment {
    std::vector<std::string> units;  // size n_treated, possibly repeated
};

/// Estimates the single-channel stacked-DiD r = |b4/b2| for one assignment.
double assignment_r(const PanelDataset& pool, const Assignment& assignment,
                    const PermutationConfig& cfg) {
    std::vector<std::string> distinct;
    for (const auto& u : assignment.units) {
        if (std::find(distinct.begin(), distinct.end(), u) == distinct.end()) {
            distinct.push_back(u);
        }
    }
    const CounterfactualResult counter =
        build_counterfactual_panel(pool, distinct, cfg.scm, 1);

    const std::vector<std::string> vars = channel_variables(cfg.channel);
    DataTable table;
    Eigen::VectorXd y;
    std::vector<double> y_rows, x_rows, tr_rows, eur_rows;

    const auto append_series = [&](const PanelDataset& panel, const std::string& unit,
                                   double tr, const std::string& pseudo_id) {
        const long u = panel.unit_index(unit);
        for (std::size_t t = 1; t < panel.n_years(); ++t) {
            std::map<std::string, std::pair<double, double>> cell;
            for (const auto& var : vars) {
                const Eigen::MatrixXd& m = panel.variable(var);
                cell[var] = {m(u, static_cast<long>(t) - 1), m(u, static_cast<long>(t))};
            }
            const auto& gdp = cell.at("GDP");
            if (gdp.first <= 0.0 || gdp.second <= 0.0) {
                throw Error(ErrorCode::NonPositiveValue, "GDP must be strictly positive");
            }
            x_rows.push_back(std::log(gdp.second) - std::log(gdp.first));
            y_rows.push_back(channel_lhs_value(cfg.channel, cell));
            tr_rows.push_back(tr);
            eur_rows.push_back(panel.years[t] >= cfg.treatment_year ? 1.0 : 0.0);
            table.unit.push_back(pseudo_id + (tr > 0.5 ? "_act" : "_syn"));
            table.year.push_back(panel.years[t]);
            table.cluster.push_back(pseudo_id);
        }
    };

    for (std::size_t j = 0; j < assignment.units.size(); ++j) {
        const std::string pseudo_id = assignment.units[j] + "#" + std::to_string(j);
        append_series(counter.synthetic, assignment.units[j], 0.0, pseudo_id);
        append_series(pool, assignment.units[j], 1.0, pseudo_id);
    }

    const long n = static_cast<long>(y_rows.size());
    table.cols["x"] = Eigen::Map<Eigen::VectorXd>(x_rows.data(), n);
    table.cols["tr"] = Eigen::Map<Eigen::VectorXd>(tr_rows.data(), n);
    table.cols["post"] = Eigen::Map<Eigen::VectorXd>(eur_rows.data(), n);
    y = Eigen::Map<Eigen::VectorXd>(y_rows.data(), n);

    Formula formula;
    formula.terms = {{"x"}, {"tr", "x"}, {"post", "x"}, {"tr", "post", "x"}};
    formula.year_dummies = true;
    if (cfg.fe_mode == FeMode::GroupSpecific) formula.group_column = "tr";
    const DesignMatrix design = build_design(table, formula);
    const RegressionFit fit = ols_fit(y, design, cfg.vcov);

    const double b2 = fit.coefficient("tr:x");
    const double b4 = fit.coefficient("tr:post:x");
    if (std::fabs(b2) < 1e-12) return std::numeric_limits<double>::infinity();
    return std::fabs(b4 / b2);
}

Assignment draw_assignment(const std::vector<std::string>& draw_pool, int n_treated, Rng& rng) {
    Assignment a;
    a.units.reserve(static_cast<std::size_t>(n_treated));
    for (int j = 0; j < n_treated; ++j) {
        a.units.push_back(draw_pool[rng.uniform_below(draw_pool.size())]);
    }
    return a;
}

}  // namespace

PermutationResult permutation_test(const PanelDataset& pool, const PermutationConfig& cfg) {
    pool.validate();
    cfg.scm.validate();
    if (cfg.n_perm < 1) throw Error(ErrorCode::PoolTooSmall, "need at least one permutation");
    if (cfg.channel < 0 || cfg.channel >= kNumChannels) {
        throw Error(ErrorCode::UnknownVariable, "channel index out of range");
    }
    const int n_treated =
        cfg.n_treated > 0 ? cfg.n_treated : static_cast<int>(cfg.true_treated.size());
    if (n_treated < 1) {
        throw Error(ErrorCode::PoolTooSmall, "pseudo-treated count must be positive");
    }

    // restrict the pool panel to the variables this channel needs
    PanelDataset slim;
    slim.units = pool.units;
    slim.years = pool.years;
    slim.source = pool.source;
    for (const auto& var : channel_variables(cfg.channel)) {
        slim.variables[var] = pool.variable(var);
    }

    std::set<std::string> excluded(cfg.draw_exclude.begin(), cfg.draw_exclude.end());
    std::vector<std::string> draw_pool;
    for (const auto& u : slim.units) {
        if (!excluded.count(u)) draw_pool.push_back(u);
    }
    if (static_cast<int>(draw_pool.size()) < 1) {
        throw Error(ErrorCode::PoolTooSmall, "draw pool is empty");
    }
    if (static_cast<int>(slim.units.size()) <= n_treated) {
        throw Error(ErrorCode::PoolTooSmall,
                    "pool must exceed the pseudo-treated count to leave donors");
    }

    PermutationResult result;
    result.n_perm = cfg.n_perm;
    result.seed = cfg.seed;
    result.true_treated = cfg.true_treated;

    // true assignment: supplied units, or the substream-0 draw under the null
    Assignment true_assignment;
    if (!cfg.true_treated.empty()) {
        true_assignment.units = cfg.true_treated;
        for (const auto& u : true_assignment.units) slim.unit_index(u);
    } else {
        Rng rng = Rng::substream(cfg.seed, 0);
        true_assignment = draw_assignment(draw_pool, n_treated, rng);
        result.true_treated = true_assignment.units;
    }
    result.r_true = assignment_r(slim, true_assignment, cfg);

    std::vector<double> r_slots(static_cast<std::size_t>(cfg.n_perm),
                                std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(static_cast<std::size_t>(cfg.n_perm), 0);
    parallel_for(static_cast<std::size_t>(cfg.n_perm), cfg.jobs, [&](std::size_t i) {
        try {
            Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i) + 1);
            const Assignment a = draw_assignment(draw_pool, n_treated, rng);
            r_slots[i] = assignment_r(slim, a, cfg);
        } catch (const std::exception&) {
            failed[i] = 1;
        }
    });

    int right_tail = 0;
    for (int i = 0; i < cfg.n_perm; ++i) {
        if (failed[static_cast<std::size_t>(i)]) {
            result.skipped.push_back(i);
            continue;
        }
        const double r = r_slots[static_cast<std::size_t>(i)];
        result.r_values.push_back(r);
        if (r >= result.r_true) ++right_tail;
    }
    result.p_value = static_cast<double>(right_tail) / static_cast<double>(cfg.n_perm);
    return result;
}

PlaceboReport placebo_study(const PanelDataset& pool,
                            const std::vector<std::string>& pseudo_treated, int treatment_year,
                            const ScmConfig& scm, const VcovSpec& vcov, unsigned jobs,
                            bool leave_one_out) {
    pool.validate();
    if (pseudo_treated.empty()) {
        throw Error(ErrorCode::PoolTooSmall, "no pseudo-treated units given");
    }
    for (const auto& u : pseudo_treated) pool.unit_index(u);

    PanelDataset synthetic;
    if (leave_one_out) {
        // each unit matched from every other pool unit
        std::vector<PanelDataset> parts(pseudo_treated.size());
        std::vector<std::string> failures(pseudo_treated.size());
        parallel_for(pseudo_treated.size(), jobs, [&](std::size_t i) {
            try {
                parts[i] =
                    build_counterfactual_panel(pool, {pseudo_treated[i]}, scm, 1).synthetic;
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        });
        for (const auto& msg : failures) {
            if (!msg.empty()) throw Error(ErrorCode::PoolTooSmall, "placebo fit failed: " + msg);
        }
        synthetic.units = pseudo_treated;
        synthetic.years = pool.years;
        synthetic.source = "synthetic";
        for (const auto& var : pool.variable_names()) {
            Eigen::MatrixXd grid(pseudo_treated.size(), pool.years.size());
            for (std::size_t i = 0; i < parts.size(); ++i) {
                grid.row(static_cast<long>(i)) = parts[i].variable(var).row(0);
            }
            synthetic.variables.emplace(var, std::move(grid));
        }
        synthetic.validate();
    } else {
        synthetic = build_counterfactual_panel(pool, pseudo_treated, scm, jobs).synthetic;
    }
    const PanelDataset actual_subset = pool.select_units(pseudo_treated);

    DidOptions options;
    options.vcov = vcov;
    const DidTable did = did_decomposition(actual_subset, synthetic, treatment_year, options);

    PlaceboReport report;
    report.did = did;
    report.pseudo_treated = pseudo_treated;
    for (const auto& ch : did.channels) {
        report.significant_at_5pct.push_back(ch.beta[3].p_value < 0.05);
    }
    return report;
}

}  // namespace riskshare
