#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riskshare/biascorr.hpp"
#include "riskshare/dgp.hpp"

using namespace riskshare;

namespace {

CellCoefficients cells(double treated_pre, double treated_post, double control_pre,
                       double control_post) {
    CellCoefficients c;
    c.beta_treated_pre = treated_pre;
    c.beta_treated_post = treated_post;
    c.beta_control_pre = control_pre;
    c.beta_control_post = control_post;
    c.channel = "unsmoothed";
    return c;
}

DidTable did_from_cells(const std::array<CellCoefficients, 5>& cell_list) {
    DidTable t;
    for (const auto& c : cell_list) {
        DidChannelResult ch;
        ch.channel = c.channel;
        ch.beta[0].estimate = c.beta_control_pre;
        ch.beta[1].estimate = c.beta_treated_pre - c.beta_control_pre;
        ch.beta[2].estimate = c.beta_control_post - c.beta_control_pre;
        ch.beta[3].estimate = c.beta_treated_post - c.beta_control_post - c.beta_treated_pre +
                              c.beta_control_pre;
        t.channels.push_back(ch);
    }
    return t;
}

}  // namespace

TEST_CASE("gamma from the pre-treatment cells") {
    CHECK(gamma_from_pretreatment(cells(0.5, 0.7, 0.5, 0.6)).value == doctest::Approx(1.0));
    CHECK(gamma_from_pretreatment(cells(0.5, 0.7, 0.4, 0.6)).value == doctest::Approx(0.8));
    CHECK_THROWS_AS(gamma_from_pretreatment(cells(0.0, 0.7, 0.4, 0.6)), Error);
}

TEST_CASE("planted gamma is recovered from simulated panels") {
    DgpConfig cfg;
    cfg.n_treated = 20;
    cfg.first_year = 1985;
    cfg.last_year = 2018;
    cfg.treatment_year = 2000;
    cfg.me_gamma = 0.9;
    cfg.me_channel = 4;
    cfg.me_dump_channel = 3;
    cfg.channel_noise_sd = 0.004;
    cfg.seed = 314159;
    const MeExperiment me = simulate_me_panels(cfg);
    DidOptions options;
    const DidTable did = did_decomposition(me.actual, me.control, 2000, options);

    const CellCoefficients c = CellCoefficients::from_did(did.channels[4]);
    const GammaEstimate gamma = gamma_from_pretreatment(c);
    // delta-method bound from the two cell SEs
    const double se_pre_treated =
        std::hypot(did.channels[4].beta[0].se, did.channels[4].beta[1].se);
    const double se_ratio = std::fabs(gamma.value) *
                            std::sqrt(std::pow(did.channels[4].beta[0].se / c.beta_control_pre, 2) +
                                      std::pow(se_pre_treated / c.beta_treated_pre, 2));
    CHECK(std::fabs(gamma.value - 0.9) < 2 * se_ratio + 0.02);
}

TEST_CASE("time-invariant correction") {
    SUBCASE("no control change means no correction") {
        const CellCoefficients c = cells(0.5, 0.8, 0.4, 0.4);
        CHECK(correct_time_invariant(c, 0.3) == doctest::Approx(0.3));
    }
    SUBCASE("perfect pre-match means no correction") {
        const CellCoefficients c = cells(0.5, 0.8, 0.5, 0.65);
        CHECK(correct_time_invariant(c, 0.3) == doctest::Approx(0.3));
    }
    SUBCASE("symbolic substitution recovers the true effect") {
        // true beta^CB = 0.5, gamma = 0.8, true beta^CA = 0.75, beta^TB = 0.5
        const double gamma = 0.8;
        const double true_control_pre = 0.5;
        const double true_control_post = 0.75;
        const double treated_pre = 0.5;
        const double treated_post = 0.9;
        const double true_beta4 =
            (treated_post - true_control_post) - (treated_pre - true_control_pre);
        const CellCoefficients c =
            cells(treated_pre, treated_post, gamma * true_control_pre, gamma * true_control_post);
        const double beta4_hat =
            (c.beta_treated_post - c.beta_control_post) - (c.beta_treated_pre - c.beta_control_pre);
        CHECK(correct_time_invariant(c, beta4_hat) == doctest::Approx(true_beta4).epsilon(1e-12));
    }
    SUBCASE("zero control pre-coefficient is rejected") {
        CHECK_THROWS_AS(correct_time_invariant(cells(0.5, 0.8, 0.0, 0.4), 0.3), Error);
    }
    SUBCASE("correction term scales linearly under common rescaling") {
        const CellCoefficients base = cells(0.5, 0.9, 0.4, 0.6);
        const double corr_base = 0.0 - correct_time_invariant(base, 0.0);
        const double scale = 3.0;
        const CellCoefficients scaled = cells(1.5, 2.7, 1.2, 1.8);
        const double corr_scaled = 0.0 - correct_time_invariant(scaled, 0.0);
        CHECK(corr_scaled == doctest::Approx(scale * corr_base).epsilon(1e-12));
    }
}

TEST_CASE("placebo correction") {
    SUBCASE("unit gammas reduce to the naive DiD") {
        const CellCoefficients c = cells(0.5, 0.8, 0.45, 0.55);
        const GammaEstimate one{1.0, GammaProvenance::PlaceboFull};
        const double naive = (0.8 - 0.55) - (0.5 - 0.45);
        CHECK(correct_placebo(c, one, one) == doctest::Approx(naive));
    }
    SUBCASE("all cells equal with unit gammas gives zero") {
        const CellCoefficients c = cells(0.4, 0.4, 0.4, 0.4);
        const GammaEstimate one{1.0, GammaProvenance::PlaceboFull};
        CHECK(correct_placebo(c, one, one) == doctest::Approx(0.0));
    }
    SUBCASE("zero gamma is rejected") {
        const CellCoefficients c = cells(0.4, 0.5, 0.4, 0.45);
        CHECK_THROWS_AS(
            correct_placebo(c, GammaEstimate{0.0, GammaProvenance::PlaceboFull},
                            GammaEstimate{1.0, GammaProvenance::PlaceboPre}),
            Error);
    }
}

TEST_CASE("sign bound") {
    SUBCASE("gamma of one means zero bias") {
        const SignBiasReport r = sign_bias(0.3, 1.0);
        CHECK(r.applicable);
        CHECK(r.bias == doctest::Approx(0.0));
        CHECK(r.sign == "zero");
    }
    SUBCASE("stated arithmetic example") {
        const SignBiasReport r = sign_bias(0.3, 0.5);
        CHECK(r.applicable);
        CHECK(r.bias == doctest::Approx(-0.3));
        CHECK(r.sign == "negative");
    }
    SUBCASE("gamma above one is indeterminate") {
        const SignBiasReport r = sign_bias(0.3, 1.2);
        CHECK_FALSE(r.applicable);
        CHECK(r.sign == "indeterminate");
    }
}

TEST_CASE("corrected_table modes") {
    // euro table: gamma 0.8 planted on every channel, control trend 0.1
    std::array<CellCoefficients, 5> euro;
    std::array<CellCoefficients, 5> placebo;
    const double gamma = 0.8;
    for (int k = 0; k < 5; ++k) {
        const double s = 0.1 + 0.05 * k;
        const double trend = 0.1;
        const double effect = 0.2;
        euro[static_cast<std::size_t>(k)] =
            cells(s, s + trend + effect, gamma * s, gamma * (s + trend));
        euro[static_cast<std::size_t>(k)].channel = kChannelNames[static_cast<std::size_t>(k)];
        // placebo units: no treatment effect, same measurement process
        placebo[static_cast<std::size_t>(k)] =
            cells(s, s + trend, gamma * s, gamma * (s + trend));
        placebo[static_cast<std::size_t>(k)].channel = kChannelNames[static_cast<std::size_t>(k)];
    }
    const DidTable did = did_from_cells(euro);
    const DidTable placebo_did = did_from_cells(placebo);

    SUBCASE("treated_pre mode corrects exactly in population") {
        const CorrectedTable t = corrected_table(did, CorrectionMode::TreatedPre, std::nullopt);
        for (const auto& ch : t.channels) {
            CHECK(ch.beta4_corrected == doctest::Approx(0.2).epsilon(1e-10));
            CHECK(ch.gamma_pre == doctest::Approx(gamma).epsilon(1e-10));
        }
    }
    SUBCASE("placebo_pre mode corrects exactly in population") {
        const CorrectedTable t = corrected_table(did, CorrectionMode::PlaceboPre, placebo_did);
        for (const auto& ch : t.channels) {
            CHECK(ch.beta4_corrected == doctest::Approx(0.2).epsilon(1e-10));
        }
    }
    SUBCASE("placebo_full mode corrects exactly in population") {
        const CorrectedTable t = corrected_table(did, CorrectionMode::PlaceboFull, placebo_did);
        for (const auto& ch : t.channels) {
            CHECK(ch.beta4_corrected == doctest::Approx(0.2).epsilon(1e-10));
            CHECK(ch.gamma_post == doctest::Approx(gamma).epsilon(1e-10));
        }
    }
    SUBCASE("unit gammas leave the raw column unchanged") {
        std::array<CellCoefficients, 5> clean;
        std::array<CellCoefficients, 5> clean_placebo;
        for (int k = 0; k < 5; ++k) {
            const double s = 0.1 + 0.05 * k;
            clean[static_cast<std::size_t>(k)] = cells(s, s + 0.3, s, s + 0.1);
            clean[static_cast<std::size_t>(k)].channel =
                kChannelNames[static_cast<std::size_t>(k)];
            // true null placebo: control equals treated in both periods
            clean_placebo[static_cast<std::size_t>(k)] = cells(s, s + 0.1, s, s + 0.1);
            clean_placebo[static_cast<std::size_t>(k)].channel =
                kChannelNames[static_cast<std::size_t>(k)];
        }
        const DidTable clean_did = did_from_cells(clean);
        const DidTable clean_placebo_did = did_from_cells(clean_placebo);
        for (const CorrectionMode mode :
             {CorrectionMode::TreatedPre, CorrectionMode::PlaceboPre, CorrectionMode::PlaceboFull}) {
            const CorrectedTable t = corrected_table(clean_did, mode, clean_placebo_did);
            for (std::size_t k = 0; k < 5; ++k) {
                CHECK(t.channels[k].gamma_pre == doctest::Approx(1.0));
                CHECK(t.channels[k].beta4_corrected ==
                      doctest::Approx(t.channels[k].beta4_raw).epsilon(1e-10));
            }
        }
    }
    SUBCASE("placebo modes require the placebo table") {
        CHECK_THROWS_AS(corrected_table(did, CorrectionMode::PlaceboFull, std::nullopt), Error);
    }
}

TEST_CASE("end-to-end: corrected estimate beats the raw one across seeds") {
    // planted gamma 0.8 on the unsmoothed channel, true effect 0.2, and a
    // post-period counterfactual drift that the raw estimate mis-measures
    int corrected_wins = 0;
    const int n_seeds = 20;
    double corrected_sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        DgpConfig cfg;
        cfg.n_treated = 24;
        cfg.first_year = 1990;
        cfg.last_year = 2018;
        cfg.treatment_year = 1999;
        cfg.channel_shares = {0.1, 0.1, 0.2, 0.3, 0.3};
        cfg.treatment_effect = {0, 0, 0, -0.2, 0.2};
        cfg.control_trend = {0, 0, 0, 0.2, -0.2};
        cfg.me_gamma = 0.8;
        cfg.me_channel = 4;
        cfg.me_dump_channel = 3;
        cfg.channel_noise_sd = 0.005;
        cfg.seed = 7000 + static_cast<std::uint64_t>(s);
        const MeExperiment me = simulate_me_panels(cfg);
        DidOptions options;
        const DidTable did = did_decomposition(me.actual, me.control, 1999, options);
        const CorrectedTable t = corrected_table(did, CorrectionMode::TreatedPre, std::nullopt);
        const double raw = t.channels[4].beta4_raw;
        const double corrected = t.channels[4].beta4_corrected;
        corrected_sum += corrected;
        if (std::fabs(corrected - 0.2) < std::fabs(raw - 0.2)) ++corrected_wins;
    }
    CHECK(std::fabs(corrected_sum / n_seeds - 0.2) < 0.05);
    CHECK(corrected_wins >= static_cast<int>(0.8 * n_seeds));
}
