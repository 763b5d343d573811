#include "riskshare/dgp.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "riskshare/format.hpp"
#include "riskshare/rng.hpp"

namespace riskshare {

namespace {

std::string unit_name(const char* prefix, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix, index + 1);
    return buf;
}

/// Level anchors as fractions of initial GDP. DNI + G == GDP at t0 and the
/// G share is generous so the exp-difference reconstruction of G stays
/// positive over long samples.
constexpr double kNiShare = 0.92;
constexpr double kDniShare = 0.70;
constexpr double kGShare = 0.30;
constexpr double kCShare = 0.60;

struct UnitPath {
    Eigen::VectorXd gdp, c, g, ni, dni;
};

/// Five-channel share vector in force at a given period for a given unit.
std::array<double, 5> shares_at(const DgpConfig& cfg, bool post, bool treated_unit) {
    std::array<double, 5> s = cfg.channel_shares;
    if (post) {
        for (int k = 0; k < 5; ++k) {
            s[static_cast<std::size_t>(k)] += cfg.control_trend[static_cast<std::size_t>(k)];
            if (treated_unit) {
                s[static_cast<std::size_t>(k)] += cfg.treatment_effect[static_cast<std::size_t>(k)];
            }
        }
    }
    return s;
}

/// Attenuates the measured channel loading by gamma, moving the displaced
/// mass to the dump channel so the loadings still sum to one.
std::array<double, 5> attenuate(const std::array<double, 5>& s, const DgpConfig& cfg) {
    std::array<double, 5> out = s;
    const auto ch = static_cast<std::size_t>(cfg.me_channel);
    const auto dump = static_cast<std::size_t>(cfg.me_dump_channel);
    const double displaced = (1.0 - cfg.me_gamma) * s[ch];
    out[ch] = cfg.me_gamma * s[ch];
    out[dump] += displaced;
    return out;
}

/// Integrates one unit's five national-account series from growth
/// innovations allocated across the channels. Every left-hand side is exactly
/// linear in the unit's dlog GDP (lhs_k = load_k * growth + orthogonal
/// noise), which makes the planted loadings the exact population estimands of
/// the channel regressions. `loadings(post)` supplies the period's share
/// vector including planted effects, trends, and attenuation.
struct Anchors {
    double lgdp, lni, ldni, ldnig, lcg;
};

UnitPath integrate_unit(const DgpConfig& cfg, const Eigen::VectorXd& factor, Rng& rng,
                        const Anchors& anchors, int first_year,
                        const std::function<std::array<double, 5>(bool)>& loadings) {
    const int n_years = cfg.last_year - cfg.first_year + 1;
    UnitPath path;
    path.gdp.resize(n_years);
    path.c.resize(n_years);
    path.g.resize(n_years);
    path.ni.resize(n_years);
    path.dni.resize(n_years);

    double lgdp = anchors.lgdp;
    double lni = anchors.lni;
    double ldni = anchors.ldni;
    double ldnig = anchors.ldnig;
    double lcg = anchors.lcg;

    auto emit = [&](int idx) {
        path.gdp[idx] = std::exp(lgdp);
        path.ni[idx] = std::exp(lni);
        path.dni[idx] = std::exp(ldni);
        path.g[idx] = std::exp(ldnig) - path.dni[idx];
        path.c[idx] = std::exp(lcg) - path.g[idx];
        if (path.g[idx] <= 0.0 || path.c[idx] <= 0.0) {
            throw Error(ErrorCode::InfeasibleShares,
                        "simulated G or C went non-positive; reduce noise scales or shares");
        }
    };

    int idx0 = 0;
    if (first_year > cfg.first_year) {
        idx0 = first_year - cfg.first_year;
    } else {
        emit(0);
        idx0 = 1;
    }

    for (int idx = idx0; idx < n_years; ++idx) {
        const int year = cfg.first_year + idx;
        const bool post = year >= cfg.treatment_year;
        const std::array<double, 5> s = loadings(post);

        const double growth = cfg.drift + factor[idx - 1] + cfg.idio_sd * rng.normal();

        double noise[5];
        double noise_mean = 0.0;
        for (double& nk : noise) {
            nk = cfg.channel_noise_sd * rng.normal();
            noise_mean += nk;
        }
        noise_mean /= 5.0;

        // lhs_k = load_k * growth + orthogonal noise: each left-hand side is
        // exactly linear in the regressor, so the channel regressions and the
        // stacked DiD estimate the planted loadings without contamination
        double lhs[5];
        for (int k = 0; k < 5; ++k) {
            lhs[k] = s[static_cast<std::size_t>(k)] * growth + (noise[k] - noise_mean);
        }

        lgdp += growth;
        lni += growth - lhs[0];
        ldni += growth - lhs[0] - lhs[1];
        ldnig += growth - lhs[0] - lhs[1] - lhs[2];
        lcg += growth - lhs[0] - lhs[1] - lhs[2] - lhs[3];
        emit(idx);
    }
    return path;
}

Anchors base_anchors(double lgdp0) {
    Anchors a;
    a.lgdp = lgdp0;
    a.lni = lgdp0 + std::log(kNiShare);
    a.ldni = lgdp0 + std::log(kDniShare);
    a.ldnig = lgdp0 + std::log(kDniShare + kGShare);
    a.lcg = lgdp0 + std::log(kCShare + kGShare);
    return a;
}

void set_panel_variables(PanelDataset& panel, const std::vector<UnitPath>& paths) {
    const long n_units = static_cast<long>(paths.size());
    const long n_years = paths.empty() ? 0 : paths.front().gdp.size();
    Eigen::MatrixXd gdp(n_units, n_years), c(n_units, n_years), g(n_units, n_years),
        ni(n_units, n_years), dni(n_units, n_years);
    for (long u = 0; u < n_units; ++u) {
        gdp.row(u) = paths[static_cast<std::size_t>(u)].gdp.transpose();
        c.row(u) = paths[static_cast<std::size_t>(u)].c.transpose();
        g.row(u) = paths[static_cast<std::size_t>(u)].g.transpose();
        ni.row(u) = paths[static_cast<std::size_t>(u)].ni.transpose();
        dni.row(u) = paths[static_cast<std::size_t>(u)].dni.transpose();
    }
    panel.variables["GDP"] = std::move(gdp);
    panel.variables["C"] = std::move(c);
    panel.variables["G"] = std::move(g);
    panel.variables["NI"] = std::move(ni);
    panel.variables["DNI"] = std::move(dni);
}

constexpr std::uint64_t kFactorStream = 0xFAC701;
constexpr std::uint64_t kUnitStreamBase = 0x100000;
constexpr std::uint64_t kMatchNoiseBase = 0x200000;
constexpr std::uint64_t kWeightStreamBase = 0x300000;
constexpr std::uint64_t kControlStreamBase = 0x400000;

Eigen::VectorXd draw_factor(const DgpConfig& cfg) {
    Rng rng = Rng::substream(cfg.seed, kFactorStream);
    const int n_diff = cfg.last_year - cfg.first_year;
    Eigen::VectorXd f(n_diff);
    for (int t = 0; t < n_diff; ++t) f[t] = cfg.factor_sd * rng.normal();
    return f;
}

double draw_base_lgdp(const DgpConfig& cfg, std::uint64_t stream) {
    Rng rng = Rng::substream(cfg.seed, stream);
    return std::log(30000.0) + 0.05 * rng.normal();
}

}  // namespace

void DgpConfig::validate() const {
    double share_sum = 0.0;
    for (const double s : channel_shares) share_sum += s;
    if (std::fabs(share_sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::InfeasibleShares, "channel shares must sum to 1");
    }
    double effect_sum = 0.0;
    for (const double e : treatment_effect) effect_sum += e;
    if (std::fabs(effect_sum) > 1e-9) {
        throw Error(ErrorCode::InfeasibleShares, "treatment effect deltas must sum to 0");
    }
    double trend_sum = 0.0;
    for (const double z : control_trend) trend_sum += z;
    if (std::fabs(trend_sum) > 1e-9) {
        throw Error(ErrorCode::InfeasibleShares, "control trend deltas must sum to 0");
    }
    if (factor_sd < 0 || idio_sd < 0 || channel_noise_sd < 0 || pre_match_noise < 0) {
        throw Error(ErrorCode::InfeasibleShares, "noise scales must be nonnegative");
    }
    if (n_donors < 1) throw Error(ErrorCode::InfeasibleShares, "need at least one donor");
    if (n_treated < 0) throw Error(ErrorCode::InfeasibleShares, "negative treated count");
    if (last_year <= first_year) {
        throw Error(ErrorCode::InfeasibleShares, "need at least two years");
    }
    if (treatment_year <= first_year || treatment_year > last_year) {
        throw Error(ErrorCode::InfeasibleShares,
                    "treatment year must lie strictly inside the year range");
    }
    if (me_gamma <= 0.0) throw Error(ErrorCode::InfeasibleShares, "me_gamma must be positive");
    if (me_channel < 0 || me_channel >= 5 || me_dump_channel < 0 || me_dump_channel >= 5 ||
        me_channel == me_dump_channel) {
        throw Error(ErrorCode::InfeasibleShares, "bad measurement-error channel indices");
    }
    if (planted_weights.size() != 0) {
        if (planted_weights.rows() != n_treated || planted_weights.cols() != n_donors) {
            throw Error(ErrorCode::InfeasibleShares, "planted weight matrix has wrong shape");
        }
        for (long i = 0; i < planted_weights.rows(); ++i) {
            if ((planted_weights.row(i).array() < -1e-12).any() ||
                std::fabs(planted_weights.row(i).sum() - 1.0) > 1e-9) {
                throw Error(ErrorCode::InfeasibleShares,
                            "planted weights must lie on the simplex");
            }
        }
    }
}

SimulationResult simulate_panel(const DgpConfig& cfg) {
    cfg.validate();
    const int n_years = cfg.last_year - cfg.first_year + 1;
    const Eigen::VectorXd factor = draw_factor(cfg);

    SimulationResult result;
    result.truth.channel_shares = cfg.channel_shares;
    result.truth.treatment_effect = cfg.treatment_effect;
    result.truth.control_trend = cfg.control_trend;
    result.truth.me_gamma = cfg.me_gamma;
    result.truth.me_channel = cfg.me_channel;
    result.truth.seed = cfg.seed;

    // donors
    std::vector<UnitPath> donor_paths;
    donor_paths.reserve(static_cast<std::size_t>(cfg.n_donors));
    for (int d = 0; d < cfg.n_donors; ++d) {
        const std::uint64_t stream = kUnitStreamBase + static_cast<std::uint64_t>(cfg.n_treated + d);
        Rng rng = Rng::substream(cfg.seed, stream);
        const Anchors anchors = base_anchors(draw_base_lgdp(cfg, stream ^ 0xABCD));
        donor_paths.push_back(integrate_unit(cfg, factor, rng, anchors, cfg.first_year,
                                             [&](bool post) { return shares_at(cfg, post, false); }));
        result.truth.donors.push_back(unit_name("D", d));
    }

    // planted weights
    Eigen::MatrixXd weights = cfg.planted_weights;
    if (weights.size() == 0 && cfg.n_treated > 0) {
        weights = Eigen::MatrixXd::Zero(cfg.n_treated, cfg.n_donors);
        const int support = std::min(3, cfg.n_donors);
        for (int i = 0; i < cfg.n_treated; ++i) {
            Rng rng = Rng::substream(cfg.seed, kWeightStreamBase + static_cast<std::uint64_t>(i));
            for (int j = 0; j < support; ++j) {
                const int donor = (i * support + j) % cfg.n_donors;
                weights(i, donor) += -std::log(1.0 - 0.999 * rng.uniform());
            }
            weights.row(i) /= weights.row(i).sum();
        }
    }
    result.truth.weights = weights;

    // treated: planted convex combination pre-treatment, own innovations after
    std::vector<UnitPath> treated_paths;
    treated_paths.reserve(static_cast<std::size_t>(cfg.n_treated));
    const int pre_len = cfg.treatment_year - cfg.first_year;
    for (int i = 0; i < cfg.n_treated; ++i) {
        UnitPath path;
        path.gdp.setZero(n_years);
        path.c.setZero(n_years);
        path.g.setZero(n_years);
        path.ni.setZero(n_years);
        path.dni.setZero(n_years);
        for (int d = 0; d < cfg.n_donors; ++d) {
            const double w = weights(i, d);
            if (w == 0.0) continue;
            const UnitPath& dp = donor_paths[static_cast<std::size_t>(d)];
            path.gdp.head(pre_len) += w * dp.gdp.head(pre_len);
            path.c.head(pre_len) += w * dp.c.head(pre_len);
            path.g.head(pre_len) += w * dp.g.head(pre_len);
            path.ni.head(pre_len) += w * dp.ni.head(pre_len);
            path.dni.head(pre_len) += w * dp.dni.head(pre_len);
        }
        if (cfg.pre_match_noise > 0.0) {
            Rng noise_rng =
                Rng::substream(cfg.seed, kMatchNoiseBase + static_cast<std::uint64_t>(i));
            const auto jitter = [&](Eigen::VectorXd& v) {
                for (int t = 0; t < pre_len; ++t) {
                    v[t] *= 1.0 + cfg.pre_match_noise * noise_rng.normal();
                }
            };
            jitter(path.gdp);
            jitter(path.c);
            jitter(path.g);
            jitter(path.ni);
            jitter(path.dni);
        }

        Anchors anchors;
        anchors.lgdp = std::log(path.gdp[pre_len - 1]);
        anchors.lni = std::log(path.ni[pre_len - 1]);
        anchors.ldni = std::log(path.dni[pre_len - 1]);
        anchors.ldnig = std::log(path.dni[pre_len - 1] + path.g[pre_len - 1]);
        anchors.lcg = std::log(path.c[pre_len - 1] + path.g[pre_len - 1]);
        Rng rng = Rng::substream(cfg.seed, kUnitStreamBase + static_cast<std::uint64_t>(i));
        const UnitPath own =
            integrate_unit(cfg, factor, rng, anchors, cfg.treatment_year,
                           [&](bool post) { return shares_at(cfg, post, true); });
        const int post_len = n_years - pre_len;
        path.gdp.tail(post_len) = own.gdp.tail(post_len);
        path.c.tail(post_len) = own.c.tail(post_len);
        path.g.tail(post_len) = own.g.tail(post_len);
        path.ni.tail(post_len) = own.ni.tail(post_len);
        path.dni.tail(post_len) = own.dni.tail(post_len);

        treated_paths.push_back(std::move(path));
        result.truth.treated.push_back(unit_name("T", i));
    }

    PanelDataset panel;
    panel.source = "simulated";
    for (int y = cfg.first_year; y <= cfg.last_year; ++y) panel.years.push_back(y);
    std::vector<UnitPath> all_paths;
    for (auto& p : treated_paths) all_paths.push_back(std::move(p));
    for (auto& p : donor_paths) all_paths.push_back(std::move(p));
    panel.units = result.truth.treated;
    panel.units.insert(panel.units.end(), result.truth.donors.begin(), result.truth.donors.end());
    set_panel_variables(panel, all_paths);
    panel.validate();
    result.panel = std::move(panel);
    return result;
}

MeExperiment simulate_me_panels(const DgpConfig& cfg) {
    cfg.validate();
    const Eigen::VectorXd factor = draw_factor(cfg);

    MeExperiment out;
    out.truth.channel_shares = cfg.channel_shares;
    out.truth.treatment_effect = cfg.treatment_effect;
    out.truth.control_trend = cfg.control_trend;
    out.truth.me_gamma = cfg.me_gamma;
    out.truth.me_channel = cfg.me_channel;
    out.truth.seed = cfg.seed;

    std::vector<UnitPath> actual_paths;
    std::vector<UnitPath> control_paths;
    for (int i = 0; i < cfg.n_treated; ++i) {
        const std::uint64_t actual_stream = kUnitStreamBase + static_cast<std::uint64_t>(i);
        Rng actual_rng = Rng::substream(cfg.seed, actual_stream);
        const Anchors anchors = base_anchors(draw_base_lgdp(cfg, actual_stream ^ 0xABCD));
        actual_paths.push_back(
            integrate_unit(cfg, factor, actual_rng, anchors, cfg.first_year,
                           [&](bool post) { return shares_at(cfg, post, true); }));

        Rng control_rng =
            Rng::substream(cfg.seed, kControlStreamBase + static_cast<std::uint64_t>(i));
        control_paths.push_back(integrate_unit(
            cfg, factor, control_rng, anchors, cfg.first_year,
            [&](bool post) { return attenuate(shares_at(cfg, post, false), cfg); }));
        out.truth.treated.push_back(unit_name("T", i));
    }

    for (int y = cfg.first_year; y <= cfg.last_year; ++y) {
        out.actual.years.push_back(y);
        out.control.years.push_back(y);
    }
    out.actual.units = out.truth.treated;
    out.control.units = out.truth.treated;
    out.actual.source = "simulated";
    out.control.source = "synthetic";
    set_panel_variables(out.actual, actual_paths);
    set_panel_variables(out.control, control_paths);
    out.actual.validate();
    out.control.validate();
    return out;
}

std::string truth_to_json(const TruthRecord& truth) {
    nlohmann::json j;
    j["treated"] = truth.treated;
    j["donors"] = truth.donors;
    j["seed"] = truth.seed;
    j["channel_shares"] = truth.channel_shares;
    j["treatment_effect"] = truth.treatment_effect;
    j["control_trend"] = truth.control_trend;
    j["me_gamma"] = round_sig12(truth.me_gamma);
    j["me_channel"] = truth.me_channel;
    nlohmann::json w = nlohmann::json::array();
    for (long i = 0; i < truth.weights.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (long d = 0; d < truth.weights.cols(); ++d) {
            row.push_back(round_sig12(truth.weights(i, d)));
        }
        w.push_back(row);
    }
    j["weights"] = w;
    return j.dump(2);
}

}  // namespace riskshare
