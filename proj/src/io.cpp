#include "riskshare/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskshare/format.hpp"

namespace riskshare {

namespace {

using nlohmann::json;

const char* kDidRows[4] = {"pre_synthetic", "pre_actual", "post_synthetic", "post_actual"};

std::string channel_header(const std::vector<std::string>& channels) {
    std::string out;
    for (const auto& c : channels) out += "," + c;
    return out;
}

json cell_json(const DidCell& c) {
    json j;
    j["estimate"] = round_sig12(c.estimate);
    j["se"] = round_sig12(c.se);
    j["p"] = round_sig12(c.p_value);
    return j;
}

std::string fe_mode_name(FeMode mode) {
    return mode == FeMode::Pooled ? "pooled" : "group_specific";
}

std::string vcov_name(VcovKind kind) {
    switch (kind) {
        case VcovKind::Homoskedastic: return "homoskedastic";
        case VcovKind::Clustered: return "clustered";
        case VcovKind::PanelCorrected: return "panel_corrected";
    }
    return "unknown";
}

std::string percent_one_decimal(double weight) {
    const double pct = 100.0 * weight;
    if (std::fabs(pct) < 0.05) return ".";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", pct);
    return buf;
}

}  // namespace

std::string did_table_csv(const DidTable& table, const std::string& config_hash) {
    std::vector<std::string> channels;
    for (const auto& ch : table.channels) channels.push_back(ch.channel);
    std::ostringstream out;
    out << "row" << channel_header(channels) << "\n";
    for (int b = 0; b < 4; ++b) {
        out << kDidRows[b];
        for (const auto& ch : table.channels) {
            out << ',' << format_g12(ch.beta[static_cast<std::size_t>(b)].estimate);
        }
        out << '\n';
        out << kDidRows[b] << "_se";
        for (const auto& ch : table.channels) {
            out << ',' << format_g12(ch.beta[static_cast<std::size_t>(b)].se);
        }
        out << '\n';
    }
    out << "n";
    for (const auto& ch : table.channels) out << ',' << ch.n_obs;
    out << '\n';
    out << "r_squared";
    for (const auto& ch : table.channels) out << ',' << format_g12(ch.r_squared);
    out << '\n';
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string did_table_json(const DidTable& table, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["fe_mode"] = fe_mode_name(table.fe_mode);
    j["vcov"] = vcov_name(table.vcov_kind);
    j["treatment_year"] = table.treatment_year;
    json chs = json::array();
    for (const auto& ch : table.channels) {
        json c;
        c["channel"] = ch.channel;
        c["beta1"] = cell_json(ch.beta[0]);
        c["beta2"] = cell_json(ch.beta[1]);
        c["beta3"] = cell_json(ch.beta[2]);
        c["beta4"] = cell_json(ch.beta[3]);
        c["n"] = ch.n_obs;
        c["r_squared"] = round_sig12(ch.r_squared);
        chs.push_back(c);
    }
    j["channels"] = chs;
    return j.dump(2);
}

std::string decomposition_csv(const ChannelDecomposition& d, const std::string& config_hash) {
    std::ostringstream out;
    out << "channel,beta,se,r_squared,n\n";
    for (const auto& e : d.estimates) {
        out << e.channel << ',' << format_g12(e.beta) << ',' << format_g12(e.se) << ','
            << format_g12(e.r_squared) << ',' << e.n_obs << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string decomposition_json(const ChannelDecomposition& d, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["vcov"] = vcov_name(d.vcov_kind);
    j["sample"] = d.sample;
    json rows = json::array();
    for (const auto& e : d.estimates) {
        json r;
        r["channel"] = e.channel;
        r["beta"] = round_sig12(e.beta);
        r["se"] = round_sig12(e.se);
        r["r_squared"] = round_sig12(e.r_squared);
        r["n"] = e.n_obs;
        rows.push_back(r);
    }
    j["estimates"] = rows;
    return j.dump(2);
}

std::string before_after_csv(const BeforeAfterResult& r, const std::string& config_hash) {
    std::ostringstream out;
    out << "channel,gamma1,gamma1_se,gamma1_p,gamma2,gamma2_se,gamma2_p,r_squared,n\n";
    for (const auto& ch : r.channels) {
        out << ch.channel << ',' << format_g12(ch.gamma1.estimate) << ','
            << format_g12(ch.gamma1.se) << ',' << format_g12(ch.gamma1.p_value) << ','
            << format_g12(ch.gamma2.estimate) << ',' << format_g12(ch.gamma2.se) << ','
            << format_g12(ch.gamma2.p_value) << ',' << format_g12(ch.r_squared) << ','
            << ch.n_obs << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string before_after_json(const BeforeAfterResult& r, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["treatment_year"] = r.treatment_year;
    json rows = json::array();
    for (const auto& ch : r.channels) {
        json row;
        row["channel"] = ch.channel;
        row["gamma1"] = cell_json(ch.gamma1);
        row["gamma2"] = cell_json(ch.gamma2);
        row["r_squared"] = round_sig12(ch.r_squared);
        row["n"] = ch.n_obs;
        rows.push_back(row);
    }
    j["channels"] = rows;
    return j.dump(2);
}

std::string trend_test_csv(const TrendTestResult& r, const std::string& config_hash) {
    std::ostringstream out;
    out << "channel,beta2,beta2_se,beta2_p,beta5,beta5_se,beta5_p\n";
    for (const auto& ch : r.channels) {
        out << ch.channel << ',' << format_g12(ch.beta2.estimate) << ','
            << format_g12(ch.beta2.se) << ',' << format_g12(ch.beta2.p_value) << ','
            << format_g12(ch.beta5.estimate) << ',' << format_g12(ch.beta5.se) << ','
            << format_g12(ch.beta5.p_value) << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string trend_test_json(const TrendTestResult& r, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["n"] = r.n_obs;
    json rows = json::array();
    for (const auto& ch : r.channels) {
        json row;
        row["channel"] = ch.channel;
        row["beta2"] = cell_json(ch.beta2);
        row["beta5"] = cell_json(ch.beta5);
        rows.push_back(row);
    }
    j["channels"] = rows;
    return j.dump(2);
}

std::string growth_variance_csv(const GrowthVarianceTable& t, const std::string& config_hash) {
    std::ostringstream out;
    out << "cell,growth,growth_se,growth_p,variance,variance_se,variance_p\n";
    for (const auto& row : t.rows) {
        out << row.cell << ',' << format_g12(row.growth.estimate) << ','
            << format_g12(row.growth.se) << ',' << format_g12(row.growth.p_value) << ','
            << format_g12(row.variance.estimate) << ',' << format_g12(row.variance.se) << ','
            << format_g12(row.variance.p_value) << '\n';
    }
    out << "n_growth," << t.n_growth_obs << '\n';
    out << "n_variance," << t.n_variance_obs << '\n';
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string growth_variance_json(const GrowthVarianceTable& t, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["n_growth"] = t.n_growth_obs;
    j["n_variance"] = t.n_variance_obs;
    j["growth_r_squared"] = round_sig12(t.growth_r_squared);
    j["variance_r_squared"] = round_sig12(t.variance_r_squared);
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r;
        r["cell"] = row.cell;
        r["growth"] = cell_json(row.growth);
        r["variance"] = cell_json(row.variance);
        rows.push_back(r);
    }
    j["rows"] = rows;
    return j.dump(2);
}

std::string weight_matrix_csv(const CounterfactualResult& r, const std::string& variable,
                              const std::string& config_hash) {
    std::vector<std::string> donors;
    std::vector<std::string> treated;
    const Eigen::MatrixXd grid = r.weight_matrix(variable, donors, treated);
    std::ostringstream out;
    out << "donor";
    for (const auto& t : treated) out << ',' << csv_escape(t);
    out << '\n';
    for (std::size_t d = 0; d < donors.size(); ++d) {
        out << csv_escape(donors[d]);
        for (std::size_t t = 0; t < treated.size(); ++t) {
            out << ',' << percent_one_decimal(grid(static_cast<long>(d), static_cast<long>(t)));
        }
        out << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string weights_json(const CounterfactualResult& r, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["v_strategy"] = r.v_strategy;
    json fits = json::array();
    for (const auto& f : r.fits) {
        json fit;
        fit["unit"] = f.unit;
        fit["variable"] = f.variable;
        fit["mspe"] = round_sig12(f.mspe);
        fit["degenerate"] = f.degenerate;
        json w;
        for (std::size_t d = 0; d < f.weights.donor_ids.size(); ++d) {
            w[f.weights.donor_ids[d]] = round_sig12(f.weights.weights[static_cast<long>(d)]);
        }
        fit["weights"] = w;
        json v = json::array();
        for (long k = 0; k < f.v.diagonal.size(); ++k) v.push_back(round_sig12(f.v.diagonal[k]));
        fit["v"] = v;
        fits.push_back(fit);
    }
    j["fits"] = fits;
    return j.dump(2);
}

std::string permutation_csv(const PermutationResult& r, const std::string& config_hash) {
    std::ostringstream out;
    out << "index,r,log_r\n";
    for (std::size_t i = 0; i < r.r_values.size(); ++i) {
        const double v = r.r_values[i];
        out << i << ',' << format_g12(v) << ',' << format_g12(std::log(v)) << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string permutation_json(const PermutationResult& r, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["p_value"] = round_sig12(r.p_value);
    // degenerate assignments carry r = +inf, which JSON numbers cannot hold
    if (std::isfinite(r.r_true)) j["r_true"] = round_sig12(r.r_true);
    else j["r_true"] = "inf";
    j["n_perm"] = r.n_perm;
    j["n_skipped"] = static_cast<long>(r.skipped.size());
    j["seed"] = r.seed;
    j["true_treated"] = r.true_treated;
    j["skipped_indices"] = r.skipped;
    return j.dump(2);
}

std::string placebo_json(const PlaceboReport& r, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["pseudo_treated"] = r.pseudo_treated;
    j["did"] = json::parse(did_table_json(r.did, config_hash));
    json flags = json::array();
    for (std::size_t i = 0; i < r.did.channels.size(); ++i) {
        json f;
        f["channel"] = r.did.channels[i].channel;
        f["beta4_significant_5pct"] = static_cast<bool>(r.significant_at_5pct[i]);
        flags.push_back(f);
    }
    j["significance"] = flags;
    return j.dump(2);
}

std::string corrected_table_csv(const CorrectedTable& t, const std::string& config_hash) {
    std::ostringstream out;
    out << "channel,beta4_raw,beta4_corrected,gamma_pre,gamma_post,mode\n";
    const char* mode = t.mode == CorrectionMode::TreatedPre
                           ? "treated_pre"
                           : (t.mode == CorrectionMode::PlaceboPre ? "placebo_pre" : "placebo_full");
    for (const auto& ch : t.channels) {
        out << ch.channel << ',' << format_g12(ch.beta4_raw) << ','
            << format_g12(ch.beta4_corrected) << ',' << format_g12(ch.gamma_pre) << ','
            << format_g12(ch.gamma_post) << ',' << mode << '\n';
    }
    out << "config_hash," << config_hash << '\n';
    return out.str();
}

std::string corrected_table_json(const CorrectedTable& t, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["mode"] = t.mode == CorrectionMode::TreatedPre
                    ? "treated_pre"
                    : (t.mode == CorrectionMode::PlaceboPre ? "placebo_pre" : "placebo_full");
    json rows = json::array();
    for (const auto& ch : t.channels) {
        json r;
        r["channel"] = ch.channel;
        r["beta4_raw"] = round_sig12(ch.beta4_raw);
        r["beta4_corrected"] = round_sig12(ch.beta4_corrected);
        r["gamma_pre"] = round_sig12(ch.gamma_pre);
        r["gamma_post"] = round_sig12(ch.gamma_post);
        rows.push_back(r);
    }
    j["channels"] = rows;
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace riskshare
