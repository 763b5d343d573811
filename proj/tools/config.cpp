#include "config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "riskshare/format.hpp"
#include "riskshare/io.hpp"

namespace riskshare::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void config_error(const std::string& message) {
    throw Error(ErrorCode::ConfigError, message);
}

CsvFormat parse_format(const std::string& text, const std::string& key) {
    if (text == "wide" || text == "wide_csv") return CsvFormat::WideCsv;
    if (text == "long" || text == "long_csv") return CsvFormat::LongCsv;
    config_error(key + " must be 'wide' or 'long', got '" + text + "'");
}

std::array<double, 5> parse_five(const std::vector<std::string>& parts, const std::string& key) {
    if (parts.size() != 5) {
        config_error(key + " needs exactly 5 comma-separated numbers");
    }
    std::array<double, 5> out{};
    for (int i = 0; i < 5; ++i) out[static_cast<std::size_t>(i)] = std::strtod(parts[static_cast<std::size_t>(i)].c_str(), nullptr);
    return out;
}

const std::set<std::string> kKnownKeys = {
    "input.actual", "input.format", "input.synthetic", "input.synthetic_format",
    "sample.window_start", "sample.window_end", "sample.exclude_years",
    "groups.treated", "groups.donors", "groups.subset",
    "scm.predictors", "scm.window_start", "scm.window_end", "scm.treatment_year",
    "scm.v_strategy", "scm.user_v", "scm.matching_mode", "scm.predictor_means_only",
    "scm.donor_exclude", "scm.fixed_weights", "scm.nm_starts", "scm.nm_max_evals",
    "did.channels", "did.vcov", "did.small_sample", "did.fe_mode", "did.sample",
    "inference.n_perm", "inference.n_treated", "inference.seed", "inference.channel",
    "inference.draw_exclude", "inference.placebo_treated",
    "biascorr.mode", "biascorr.did_table", "biascorr.placebo_table",
    "identity.direct", "identity.implied",
    "dgp.n_treated", "dgp.n_donors", "dgp.first_year", "dgp.last_year",
    "dgp.treatment_year", "dgp.shares", "dgp.effect", "dgp.trend", "dgp.drift",
    "dgp.factor_sd", "dgp.idio_sd", "dgp.channel_noise_sd", "dgp.pre_match_noise",
    "dgp.me_gamma",
    "output.dir", "output.format", "output.jobs",
};

int channel_index(const std::string& name) {
    for (int k = 0; k < kNumChannels; ++k) {
        if (name == kChannelNames[static_cast<std::size_t>(k)]) return k;
    }
    static const std::map<std::string, int> kShort = {
        {"m", 0}, {"g", 1}, {"p", 2}, {"s", 3}, {"u", 4}};
    const auto it = kShort.find(name);
    if (it != kShort.end()) return it->second;
    config_error("unknown channel '" + name + "'");
}

}  // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                config_error("line " + std::to_string(line_no) + ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            config_error("line " + std::to_string(line_no) + ": empty key");
        }
        out.sections_[section][key] = value;
    }
    return out;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

std::vector<std::string> IniFile::get_list(const std::string& section,
                                           const std::string& key) const {
    std::vector<std::string> out;
    const std::string raw = get(section, key, "");
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int IniFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    const std::string raw = get(section, key, "");
    if (raw.empty()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') {
        config_error(section + "." + key + ": '" + raw + "' is not an integer");
    }
    return static_cast<int>(v);
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    const std::string raw = get(section, key, "");
    if (raw.empty()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') {
        config_error(section + "." + key + ": '" + raw + "' is not a number");
    }
    return v;
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const std::string raw = get(section, key, "");
    if (raw.empty()) return fallback;
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    config_error(section + "." + key + ": '" + raw + "' is not a boolean");
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    const std::string text = read_text_file(path);
    const IniFile ini = IniFile::parse(text);

    for (const auto& [section, keys] : ini.sections()) {
        for (const auto& [key, _] : keys) {
            if (!kKnownKeys.count(section + "." + key)) {
                config_error("unknown config key '" + section + "." + key + "'");
            }
        }
    }

    PipelineConfig cfg;
    cfg.actual_path = ini.get("input", "actual", "");
    cfg.actual_format = parse_format(ini.get("input", "format", "wide"), "input.format");
    cfg.synthetic_path = ini.get("input", "synthetic", "");
    cfg.synthetic_format =
        parse_format(ini.get("input", "synthetic_format", "wide"), "input.synthetic_format");

    if (ini.has("sample", "window_start")) {
        cfg.window_start = ini.get_int("sample", "window_start", 0);
    }
    if (ini.has("sample", "window_end")) {
        cfg.window_end = ini.get_int("sample", "window_end", 0);
    }
    for (const auto& y : ini.get_list("sample", "exclude_years")) {
        cfg.exclude_years.push_back(std::atoi(y.c_str()));
    }

    cfg.treated = ini.get_list("groups", "treated");
    cfg.donors = ini.get_list("groups", "donors");
    cfg.subset = ini.get_list("groups", "subset");

    cfg.scm.predictors = ini.get_list("scm", "predictors");
    cfg.scm.window_start = ini.get_int("scm", "window_start", 1990);
    cfg.scm.window_end = ini.get_int("scm", "window_end", 1998);
    cfg.scm.treatment_year = ini.get_int("scm", "treatment_year", 1999);
    const std::string strategy = ini.get("scm", "v_strategy", "nested");
    if (strategy == "nested" || strategy == "nested_mspe") {
        cfg.scm.v_strategy = VStrategy::NestedMspe;
    } else if (strategy == "equal") {
        cfg.scm.v_strategy = VStrategy::Equal;
    } else if (strategy == "user" || strategy == "user_supplied") {
        cfg.scm.v_strategy = VStrategy::UserSupplied;
        const auto parts = ini.get_list("scm", "user_v");
        if (parts.empty()) config_error("scm.user_v required with v_strategy = user");
        Eigen::VectorXd v(static_cast<long>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            v[static_cast<long>(i)] = std::strtod(parts[i].c_str(), nullptr);
        }
        cfg.scm.user_v = v;
    } else {
        config_error("scm.v_strategy must be nested, equal, or user");
    }
    const std::string mode = ini.get("scm", "matching_mode", "levels");
    if (mode == "levels") {
        cfg.scm.matching_mode = MatchingMode::Levels;
    } else if (mode == "first_differences") {
        cfg.scm.matching_mode = MatchingMode::FirstDifferencesPlusLevelMeans;
    } else {
        config_error("scm.matching_mode must be levels or first_differences");
    }
    cfg.scm.predictor_means_only = ini.get_bool("scm", "predictor_means_only", false);
    cfg.scm.donor_exclude = ini.get_list("scm", "donor_exclude");
    cfg.scm.fixed_weights = ini.get_bool("scm", "fixed_weights", false);
    cfg.scm.nm_starts = ini.get_int("scm", "nm_starts", 20);
    cfg.scm.nm_max_evals = ini.get_int("scm", "nm_max_evals", 2000);

    const auto channel_list = ini.get_list("did", "channels");
    if (!channel_list.empty() && channel_list != std::vector<std::string>{"all"}) {
        cfg.channels.channels.clear();
        for (const auto& name : channel_list) {
            cfg.channels.channels.push_back(channel_index(name));
        }
    }
    const std::string vcov = ini.get("did", "vcov", "clustered");
    if (vcov == "clustered") {
        cfg.vcov.kind = VcovKind::Clustered;
    } else if (vcov == "homoskedastic") {
        cfg.vcov.kind = VcovKind::Homoskedastic;
    } else if (vcov == "pcse" || vcov == "panel_corrected") {
        cfg.vcov.kind = VcovKind::PanelCorrected;
    } else {
        config_error("did.vcov must be clustered, homoskedastic, or pcse");
    }
    cfg.vcov.small_sample = ini.get_bool("did", "small_sample", true);
    const std::string fe = ini.get("did", "fe_mode", "pooled");
    if (fe == "pooled") {
        cfg.fe_mode = FeMode::Pooled;
    } else if (fe == "group_specific") {
        cfg.fe_mode = FeMode::GroupSpecific;
    } else {
        config_error("did.fe_mode must be pooled or group_specific");
    }
    cfg.decompose_sample = ini.get("did", "sample", "all");
    if (cfg.decompose_sample != "all" && cfg.decompose_sample != "treated" &&
        cfg.decompose_sample != "donors") {
        config_error("did.sample must be all, treated, or donors");
    }

    cfg.n_perm = ini.get_int("inference", "n_perm", 200);
    cfg.n_treated_draw = ini.get_int("inference", "n_treated", 0);
    cfg.seed = static_cast<std::uint64_t>(ini.get_double("inference", "seed", 1));
    cfg.inference_channel = channel_index(ini.get("inference", "channel", "unsmoothed"));
    cfg.draw_exclude = ini.get_list("inference", "draw_exclude");
    cfg.placebo_treated = ini.get_list("inference", "placebo_treated");

    const std::string correction = ini.get("biascorr", "mode", "treated_pre");
    if (correction == "treated_pre") {
        cfg.correction_mode = CorrectionMode::TreatedPre;
    } else if (correction == "placebo_pre") {
        cfg.correction_mode = CorrectionMode::PlaceboPre;
    } else if (correction == "placebo_full") {
        cfg.correction_mode = CorrectionMode::PlaceboFull;
    } else {
        config_error("biascorr.mode must be treated_pre, placebo_pre, or placebo_full");
    }
    cfg.did_table_path = ini.get("biascorr", "did_table", "");
    cfg.placebo_table_path = ini.get("biascorr", "placebo_table", "");

    cfg.identity_direct = ini.get("identity", "direct", "GDP");
    for (const auto& term : ini.get_list("identity", "implied")) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) {
            cfg.identity_rule.emplace_back(term, 1.0);
        } else {
            cfg.identity_rule.emplace_back(trim(term.substr(0, colon)),
                                           std::strtod(term.substr(colon + 1).c_str(), nullptr));
        }
    }

    cfg.dgp.n_treated = ini.get_int("dgp", "n_treated", cfg.dgp.n_treated);
    cfg.dgp.n_donors = ini.get_int("dgp", "n_donors", cfg.dgp.n_donors);
    cfg.dgp.first_year = ini.get_int("dgp", "first_year", cfg.dgp.first_year);
    cfg.dgp.last_year = ini.get_int("dgp", "last_year", cfg.dgp.last_year);
    cfg.dgp.treatment_year = ini.get_int("dgp", "treatment_year", cfg.dgp.treatment_year);
    if (ini.has("dgp", "shares")) {
        cfg.dgp.shares = parse_five(ini.get_list("dgp", "shares"), "dgp.shares");
    }
    if (ini.has("dgp", "effect")) {
        cfg.dgp.effect = parse_five(ini.get_list("dgp", "effect"), "dgp.effect");
    }
    if (ini.has("dgp", "trend")) {
        cfg.dgp.trend = parse_five(ini.get_list("dgp", "trend"), "dgp.trend");
    }
    cfg.dgp.drift = ini.get_double("dgp", "drift", cfg.dgp.drift);
    cfg.dgp.factor_sd = ini.get_double("dgp", "factor_sd", cfg.dgp.factor_sd);
    cfg.dgp.idio_sd = ini.get_double("dgp", "idio_sd", cfg.dgp.idio_sd);
    cfg.dgp.channel_noise_sd =
        ini.get_double("dgp", "channel_noise_sd", cfg.dgp.channel_noise_sd);
    cfg.dgp.pre_match_noise = ini.get_double("dgp", "pre_match_noise", cfg.dgp.pre_match_noise);
    cfg.dgp.me_gamma = ini.get_double("dgp", "me_gamma", cfg.dgp.me_gamma);

    cfg.out_dir = ini.get("output", "dir", "out");
    cfg.format = ini.get("output", "format", "both");
    if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "both") {
        config_error("output.format must be csv, json, or both");
    }
    cfg.jobs = static_cast<unsigned>(std::max(1, ini.get_int("output", "jobs", 1)));

    cfg.config_hash = fnv1a_hex(text);
    return cfg;
}

}  // namespace riskshare::cli
