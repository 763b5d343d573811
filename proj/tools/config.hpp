#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/biascorr.hpp"
#include "riskshare/channels.hpp"
#include "riskshare/panel.hpp"
#include "riskshare/regress.hpp"
#include "riskshare/scm.hpp"

namespace riskshare::cli {

/// Parsed `key = value` file with `[section]` headers, `#`/`;` comments, and
/// comma-separated lists. Section and key names are case-sensitive.
class IniFile {
  public:
    static IniFile parse(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    /// Keys actually present, for unknown-key diagnostics.
    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct DgpSettings {
    int n_treated = 11;
    int n_donors = 13;
    int first_year = 1990;
    int last_year = 2018;
    int treatment_year = 1999;
    std::array<double, 5> shares = {0.1, 0.1, 0.2, 0.3, 0.3};
    std::array<double, 5> effect = {0, 0, 0, 0, 0};
    std::array<double, 5> trend = {0, 0, 0, 0, 0};
    double drift = 0.02;
    double factor_sd = 0.015;
    double idio_sd = 0.025;
    double channel_noise_sd = 0.008;
    double pre_match_noise = 0.0;
    double me_gamma = 1.0;
};

struct PipelineConfig {
    // input
    std::string actual_path;
    CsvFormat actual_format = CsvFormat::WideCsv;
    std::string synthetic_path;  // empty: default to <out>/synthetic_panel.csv
    CsvFormat synthetic_format = CsvFormat::WideCsv;

    // sample
    std::optional<int> window_start;
    std::optional<int> window_end;
    std::vector<int> exclude_years;

    // groups
    std::vector<std::string> treated;
    std::vector<std::string> donors;  // empty: complement of treated
    std::vector<std::string> subset;  // optional treated filter (core/periphery)

    ScmConfig scm;

    // estimation
    ChannelSpec channels;
    VcovSpec vcov;
    FeMode fe_mode = FeMode::Pooled;
    std::string decompose_sample = "all";  // all | treated | donors

    // inference
    int n_perm = 200;
    int n_treated_draw = 0;  // 0: size of treated
    std::uint64_t seed = 1;
    int inference_channel = 4;
    std::vector<std::string> draw_exclude;
    std::vector<std::string> placebo_treated;  // empty: all donors

    // bias correction
    CorrectionMode correction_mode = CorrectionMode::TreatedPre;
    std::string did_table_path;      // empty: <out>/did.json
    std::string placebo_table_path;  // empty: <out>/placebo.json

    // identity check
    std::string identity_direct = "GDP";
    std::vector<std::pair<std::string, double>> identity_rule;  // implied = sum coef*var

    DgpSettings dgp;

    // output
    std::string out_dir = "out";
    std::string format = "both";  // csv | json | both
    unsigned jobs = 1;

    std::string config_hash;  // stamped into every artifact

    /// Loads and validates a config file; CLI overrides are applied by main.
    static PipelineConfig load(const std::string& path);
};

}  // namespace riskshare::cli
