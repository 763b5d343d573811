#include "pipeline.hpp"

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "riskshare/dgp.hpp"
#include "riskshare/format.hpp"
#include "riskshare/inference.hpp"
#include "riskshare/io.hpp"

namespace riskshare::cli {

namespace {

using nlohmann::json;

struct Workspace {
    PipelineConfig cfg;
    std::vector<std::string> outputs;

    std::string path(const std::string& name) const {
        return (std::filesystem::path(cfg.out_dir) / name).string();
    }

    void emit_table(const std::string& stem, const std::string& csv, const std::string& js) {
        if (cfg.format != "json") {
            write_text_file(path(stem + ".csv"), csv);
            outputs.push_back(stem + ".csv");
        }
        if (cfg.format != "csv") {
            write_text_file(path(stem + ".json"), js);
            outputs.push_back(stem + ".json");
        }
    }

    void emit_json(const std::string& name, const std::string& content) {
        write_text_file(path(name), content);
        outputs.push_back(name);
    }

    void manifest(const std::string& command) {
        json m;
        m["command"] = command;
        m["config_hash"] = cfg.config_hash;
        m["seed"] = cfg.seed;
        m["version"] = kVersion;
        m["outputs"] = outputs;
        write_text_file(path("manifest_" + command + ".json"), m.dump(2));
    }
};

[[noreturn]] void config_error(const std::string& message) {
    throw Error(ErrorCode::ConfigError, message);
}

PanelDataset load_actual(const PipelineConfig& cfg) {
    if (cfg.actual_path.empty()) config_error("input.actual is required for this command");
    PanelDataset panel = load_panel(cfg.actual_path, cfg.actual_format);
    if (cfg.window_start || cfg.window_end) {
        const int first = cfg.window_start.value_or(panel.years.front());
        const int last = cfg.window_end.value_or(panel.years.back());
        if (std::find(panel.years.begin(), panel.years.end(), first) == panel.years.end() ||
            std::find(panel.years.begin(), panel.years.end(), last) == panel.years.end()) {
            config_error("sample window [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] is not inside the panel years");
        }
        panel = panel.select_years(first, last);
    }
    return panel;
}

PanelDataset load_synthetic(const PipelineConfig& cfg, const Workspace& ws) {
    const std::string path =
        cfg.synthetic_path.empty() ? ws.path("synthetic_panel.csv") : cfg.synthetic_path;
    PanelDataset panel = load_panel(path, cfg.synthetic_format);
    panel.source = "synthetic";
    if (cfg.window_start || cfg.window_end) {
        const int first = cfg.window_start.value_or(panel.years.front());
        const int last = cfg.window_end.value_or(panel.years.back());
        panel = panel.select_years(first, last);
    }
    return panel;
}

/// Treated units for estimation: the configured treated list, optionally
/// filtered to the configured subset. Every referenced unit must exist.
std::vector<std::string> effective_treated(const PipelineConfig& cfg, const PanelDataset& panel) {
    if (cfg.treated.empty()) config_error("groups.treated is required for this command");
    std::set<std::string> units(panel.units.begin(), panel.units.end());
    for (const auto& u : cfg.treated) {
        if (!units.count(u)) config_error("treated unit '" + u + "' is not in the panel");
    }
    std::vector<std::string> out = cfg.treated;
    if (!cfg.subset.empty()) {
        std::set<std::string> treated_set(cfg.treated.begin(), cfg.treated.end());
        for (const auto& u : cfg.subset) {
            if (!treated_set.count(u)) {
                config_error("subset unit '" + u + "' is not in groups.treated");
            }
        }
        std::set<std::string> keep(cfg.subset.begin(), cfg.subset.end());
        out.clear();
        for (const auto& u : cfg.treated) {
            if (keep.count(u)) out.push_back(u);
        }
    }
    return out;
}

std::vector<std::string> effective_donors(const PipelineConfig& cfg, const PanelDataset& panel) {
    std::set<std::string> units(panel.units.begin(), panel.units.end());
    std::set<std::string> treated(cfg.treated.begin(), cfg.treated.end());
    if (!cfg.donors.empty()) {
        for (const auto& u : cfg.donors) {
            if (!units.count(u)) config_error("donor unit '" + u + "' is not in the panel");
            if (treated.count(u)) {
                config_error("unit '" + u + "' is listed as both treated and donor");
            }
        }
        return cfg.donors;
    }
    std::vector<std::string> out;
    for (const auto& u : panel.units) {
        if (!treated.count(u)) out.push_back(u);
    }
    return out;
}

/// Restricts the donor pool: the SCM builder treats every non-treated unit as
/// a donor, so excluded units are folded into ScmConfig.donor_exclude.
ScmConfig scm_with_donor_filter(const PipelineConfig& cfg, const PanelDataset& panel,
                                const std::vector<std::string>& donors) {
    ScmConfig scm = cfg.scm;
    std::set<std::string> keep(donors.begin(), donors.end());
    std::set<std::string> treated(cfg.treated.begin(), cfg.treated.end());
    for (const auto& u : panel.units) {
        if (!keep.count(u) && !treated.count(u)) scm.donor_exclude.push_back(u);
    }
    return scm;
}

DidTable did_table_from_json(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, "cannot parse '" + path + "': " + e.what());
    }
    DidTable t;
    t.treatment_year = j.value("treatment_year", 0);
    for (const auto& ch : j.at("channels")) {
        DidChannelResult r;
        r.channel = ch.at("channel").get<std::string>();
        const char* names[4] = {"beta1", "beta2", "beta3", "beta4"};
        for (int b = 0; b < 4; ++b) {
            const auto& cell = ch.at(names[b]);
            r.beta[static_cast<std::size_t>(b)].estimate = cell.at("estimate").get<double>();
            r.beta[static_cast<std::size_t>(b)].se = cell.at("se").get<double>();
            r.beta[static_cast<std::size_t>(b)].p_value = cell.at("p").get<double>();
        }
        r.n_obs = ch.value("n", 0L);
        r.r_squared = ch.value("r_squared", 0.0);
        t.channels.push_back(r);
    }
    return t;
}

void cmd_simulate(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    DgpConfig dgp;
    dgp.n_treated = cfg.dgp.n_treated;
    dgp.n_donors = cfg.dgp.n_donors;
    dgp.first_year = cfg.dgp.first_year;
    dgp.last_year = cfg.dgp.last_year;
    dgp.treatment_year = cfg.dgp.treatment_year;
    dgp.channel_shares = cfg.dgp.shares;
    dgp.treatment_effect = cfg.dgp.effect;
    dgp.control_trend = cfg.dgp.trend;
    dgp.drift = cfg.dgp.drift;
    dgp.factor_sd = cfg.dgp.factor_sd;
    dgp.idio_sd = cfg.dgp.idio_sd;
    dgp.channel_noise_sd = cfg.dgp.channel_noise_sd;
    dgp.pre_match_noise = cfg.dgp.pre_match_noise;
    dgp.me_gamma = cfg.dgp.me_gamma;
    dgp.seed = cfg.seed;
    const SimulationResult sim = simulate_panel(dgp);
    write_panel(sim.panel, ws.path("actual_panel.csv"), CsvFormat::WideCsv,
                "config_hash=" + cfg.config_hash);
    ws.outputs.push_back("actual_panel.csv");
    json truth = json::parse(truth_to_json(sim.truth));
    truth["config_hash"] = ws.cfg.config_hash;
    ws.emit_json("truth.json", truth.dump(2));
}

void cmd_match(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const std::vector<std::string> treated = effective_treated(cfg, actual);
    const std::vector<std::string> donors = effective_donors(cfg, actual);
    const ScmConfig scm = scm_with_donor_filter(cfg, actual, donors);

    const CounterfactualResult counter =
        build_counterfactual_panel(actual, treated, scm, cfg.jobs);
    write_panel(counter.synthetic, ws.path("synthetic_panel.csv"), CsvFormat::WideCsv,
                "config_hash=" + cfg.config_hash);
    ws.outputs.push_back("synthetic_panel.csv");
    for (const auto& var : counter.synthetic.variable_names()) {
        const std::string stem = "weights_" + var;
        if (cfg.format != "json") {
            write_text_file(ws.path(stem + ".csv"),
                            weight_matrix_csv(counter, var, cfg.config_hash));
            ws.outputs.push_back(stem + ".csv");
        }
    }
    ws.emit_json("weights.json", weights_json(counter, cfg.config_hash));
}

void cmd_decompose(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    PanelDataset panel = load_actual(cfg);
    if (cfg.decompose_sample == "treated") {
        panel = panel.select_units(effective_treated(cfg, panel));
    } else if (cfg.decompose_sample == "donors") {
        panel = panel.select_units(effective_donors(cfg, panel));
    }
    const ChannelDecomposition d = channel_decomposition(panel, cfg.channels, cfg.vcov);
    ws.emit_table("decompose", decomposition_csv(d, cfg.config_hash),
                  decomposition_json(d, cfg.config_hash));
}

void cmd_did(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const std::vector<std::string> treated = effective_treated(cfg, actual);
    const PanelDataset synthetic = load_synthetic(cfg, ws).select_units(treated);

    DidOptions options;
    options.spec = cfg.channels;
    options.vcov = cfg.vcov;
    options.fe_mode = cfg.fe_mode;
    options.exclude_years = cfg.exclude_years;
    const DidTable table = did_decomposition(actual.select_units(treated), synthetic,
                                             cfg.scm.treatment_year, options);
    ws.emit_table("did", did_table_csv(table, cfg.config_hash),
                  did_table_json(table, cfg.config_hash));
}

void cmd_before_after(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const PanelDataset panel = actual.select_units(effective_treated(cfg, actual));
    const BeforeAfterResult r =
        before_after(panel, cfg.scm.treatment_year, cfg.channels, cfg.vcov);
    ws.emit_table("before_after", before_after_csv(r, cfg.config_hash),
                  before_after_json(r, cfg.config_hash));
}

void cmd_trend_test(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const std::vector<std::string> treated = effective_treated(cfg, actual);
    const PanelDataset synthetic = load_synthetic(cfg, ws).select_units(treated);
    const TrendTestResult r = parallel_trend_test(actual.select_units(treated), synthetic,
                                                  cfg.scm.treatment_year, cfg.channels, cfg.vcov);
    ws.emit_table("trend_test", trend_test_csv(r, cfg.config_hash),
                  trend_test_json(r, cfg.config_hash));
}

void cmd_growth_did(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const std::vector<std::string> treated = effective_treated(cfg, actual);
    const PanelDataset synthetic = load_synthetic(cfg, ws).select_units(treated);
    const GrowthVarianceTable t = growth_variance_did(actual.select_units(treated), synthetic,
                                                      cfg.scm.treatment_year, cfg.vcov);
    ws.emit_table("growth_did", growth_variance_csv(t, cfg.config_hash),
                  growth_variance_json(t, cfg.config_hash));
}

void cmd_permute(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset pool = load_actual(cfg);
    PermutationConfig pc;
    pc.n_treated = cfg.n_treated_draw;
    pc.n_perm = cfg.n_perm;
    pc.treatment_year = cfg.scm.treatment_year;
    pc.seed = cfg.seed;
    pc.channel = cfg.inference_channel;
    pc.scm = cfg.scm;
    pc.vcov = cfg.vcov;
    pc.fe_mode = cfg.fe_mode;
    pc.draw_exclude = cfg.draw_exclude;
    pc.jobs = cfg.jobs;
    if (!cfg.treated.empty()) {
        pc.true_treated = effective_treated(cfg, pool);
        if (pc.n_treated == 0) pc.n_treated = static_cast<int>(pc.true_treated.size());
    }
    const PermutationResult r = permutation_test(pool, pc);
    ws.emit_table("permutation_r", permutation_csv(r, cfg.config_hash),
                  permutation_json(r, cfg.config_hash));
    ws.emit_json("permutation.json", permutation_json(r, cfg.config_hash));
}

void cmd_placebo(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const PanelDataset actual = load_actual(cfg);
    const std::vector<std::string> donors = effective_donors(cfg, actual);
    const PanelDataset pool = actual.select_units(donors);
    std::vector<std::string> pseudo = cfg.placebo_treated.empty() ? donors : cfg.placebo_treated;
    std::set<std::string> donor_set(donors.begin(), donors.end());
    for (const auto& u : pseudo) {
        if (!donor_set.count(u)) {
            config_error("placebo unit '" + u + "' is not in the donor pool");
        }
    }
    // the whole-pool default matches every never-treated unit from the others
    const bool leave_one_out = cfg.placebo_treated.empty();
    const PlaceboReport report = placebo_study(pool, pseudo, cfg.scm.treatment_year, cfg.scm,
                                               cfg.vcov, cfg.jobs, leave_one_out);
    ws.emit_table("placebo_did", did_table_csv(report.did, cfg.config_hash),
                  did_table_json(report.did, cfg.config_hash));
    ws.emit_json("placebo.json", placebo_json(report, cfg.config_hash));
}

void cmd_bias_correct(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    const std::string did_path =
        cfg.did_table_path.empty() ? ws.path("did.json") : cfg.did_table_path;
    const DidTable did = did_table_from_json(did_path);
    std::optional<DidTable> placebo;
    if (cfg.correction_mode != CorrectionMode::TreatedPre) {
        const std::string placebo_path =
            cfg.placebo_table_path.empty() ? ws.path("placebo_did.json") : cfg.placebo_table_path;
        placebo = did_table_from_json(placebo_path);
    }
    const CorrectedTable t = corrected_table(did, cfg.correction_mode, placebo);
    ws.emit_table("bias_corrected", corrected_table_csv(t, cfg.config_hash),
                  corrected_table_json(t, cfg.config_hash));
}

void cmd_identity_check(Workspace& ws) {
    const PipelineConfig& cfg = ws.cfg;
    if (cfg.identity_rule.empty()) {
        config_error("identity.implied must name at least one variable");
    }
    const PanelDataset synthetic = load_synthetic(cfg, ws);
    json out;
    out["config_hash"] = cfg.config_hash;
    out["direct"] = cfg.identity_direct;
    json units = json::array();
    for (const auto& unit : synthetic.units) {
        const long u = synthetic.unit_index(unit);
        const Eigen::VectorXd direct =
            synthetic.variable(cfg.identity_direct).row(u).transpose();
        Eigen::VectorXd implied = Eigen::VectorXd::Zero(direct.size());
        for (const auto& [var, coef] : cfg.identity_rule) {
            implied += coef * synthetic.variable(var).row(u).transpose();
        }
        const IdentityDiagnostic d = identity_diagnostic(direct, implied);
        json row;
        row["unit"] = unit;
        row["mean_percent"] = round_sig12(d.mean_percent);
        row["sd_percent"] = round_sig12(d.sd_percent);
        units.push_back(row);
    }
    out["units"] = units;
    ws.emit_json("identity.json", out.dump(2));
}

}  // namespace

void run_command(const PipelineConfig& cfg, const std::string& command) {
    std::filesystem::create_directories(cfg.out_dir);
    if (command == "full") {
        // match then did over the on-disk synthetic panel, so the chained
        // `match` + `did` invocations reproduce this run byte for byte
        run_command(cfg, "match");
        run_command(cfg, "did");
        return;
    }

    Workspace ws{cfg, {}};
    if (command == "simulate") cmd_simulate(ws);
    else if (command == "match") cmd_match(ws);
    else if (command == "decompose") cmd_decompose(ws);
    else if (command == "did") cmd_did(ws);
    else if (command == "before-after") cmd_before_after(ws);
    else if (command == "trend-test") cmd_trend_test(ws);
    else if (command == "permute") cmd_permute(ws);
    else if (command == "placebo") cmd_placebo(ws);
    else if (command == "bias-correct") cmd_bias_correct(ws);
    else if (command == "growth-did") cmd_growth_did(ws);
    else if (command == "identity-check") cmd_identity_check(ws);
    else config_error("unknown command '" + command + "'");
    ws.manifest(command);
}

}  // namespace riskshare::cli
