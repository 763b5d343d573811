#include "riskshare/biascorr.hpp"

#include <cmath>

namespace riskshare {

namespace {
constexpr double kDenomTol = 1e-12;
}

CellCoefficients CellCoefficients::from_did(const DidChannelResult& ch) {
    CellCoefficients c;
    c.channel = ch.channel;
    const double b1 = ch.beta[0].estimate;
    const double b2 = ch.beta[1].estimate;
    const double b3 = ch.beta[2].estimate;
    const double b4 = ch.beta[3].estimate;
    c.beta_control_pre = b1;
    c.beta_treated_pre = b1 + b2;
    c.beta_control_post = b1 + b3;
    c.beta_treated_post = b1 + b2 + b3 + b4;
    return c;
}

GammaEstimate gamma_from_pretreatment(const CellCoefficients& cells) {
    if (std::fabs(cells.beta_treated_pre) < kDenomTol) {
        throw Error(ErrorCode::ZeroDenominator,
                    "treated pre-period coefficient is zero; gamma undefined");
    }
    GammaEstimate g;
    g.value = cells.beta_control_pre / cells.beta_treated_pre;
    g.provenance = GammaProvenance::TreatedPre;
    return g;
}

double correct_time_invariant(const CellCoefficients& cells, double beta4_hat) {
    if (std::fabs(cells.beta_control_pre) < kDenomTol) {
        throw Error(ErrorCode::ZeroDenominator,
                    "control pre-period coefficient is zero; correction undefined");
    }
    const double bias = (cells.beta_control_post - cells.beta_control_pre) *
                        (cells.beta_treated_pre - cells.beta_control_pre) /
                        cells.beta_control_pre;
    return beta4_hat - bias;
}

double correct_time_invariant_with_gamma(const CellCoefficients& cells, double beta4_hat,
                                         const GammaEstimate& gamma) {
    if (std::fabs(gamma.value) < kDenomTol) {
        throw Error(ErrorCode::ZeroGamma, "gamma estimate is zero");
    }
    const double bias =
        (cells.beta_control_post - cells.beta_control_pre) * (1.0 / gamma.value - 1.0);
    return beta4_hat - bias;
}

double correct_placebo(const CellCoefficients& cells, const GammaEstimate& gamma_post,
                       const GammaEstimate& gamma_pre) {
    if (std::fabs(gamma_post.value) < kDenomTol || std::fabs(gamma_pre.value) < kDenomTol) {
        throw Error(ErrorCode::ZeroGamma, "gamma estimate is zero");
    }
    return cells.beta_treated_post - cells.beta_control_post / gamma_post.value -
           cells.beta_treated_pre + cells.beta_control_pre / gamma_pre.value;
}

SignBiasReport sign_bias(double beta_control_post, double gamma_post) {
    SignBiasReport report;
    if (gamma_post <= 0.0 || gamma_post > 1.0) {
        report.sign = "indeterminate";
        report.applicable = false;
        return report;
    }
    report.applicable = true;
    report.bias = -beta_control_post * (1.0 / gamma_post - 1.0);
    if (report.bias > 0.0) report.sign = "positive";
    else if (report.bias < 0.0) report.sign = "negative";
    else report.sign = "zero";
    return report;
}

CorrectedTable corrected_table(const DidTable& did, CorrectionMode mode,
                               const std::optional<DidTable>& placebo) {
    if (mode != CorrectionMode::TreatedPre && !placebo.has_value()) {
        throw Error(ErrorCode::ZeroGamma, "placebo correction modes need a placebo DiD table");
    }
    CorrectedTable out;
    out.mode = mode;
    for (const auto& ch : did.channels) {
        const CellCoefficients cells = CellCoefficients::from_did(ch);
        const double beta4_hat = ch.beta[3].estimate;
        CorrectedChannel corrected;
        corrected.channel = ch.channel;
        corrected.beta4_raw = beta4_hat;

        if (mode == CorrectionMode::TreatedPre) {
            const GammaEstimate gamma = gamma_from_pretreatment(cells);
            corrected.gamma_pre = gamma.value;
            corrected.gamma_post = gamma.value;
            corrected.beta4_corrected = correct_time_invariant(cells, beta4_hat);
        } else {
            const DidChannelResult* pl = nullptr;
            for (const auto& pch : placebo->channels) {
                if (pch.channel == ch.channel) pl = &pch;
            }
            if (!pl) {
                throw Error(ErrorCode::ZeroGamma,
                            "placebo table lacks channel '" + ch.channel + "'");
            }
            const CellCoefficients pcells = CellCoefficients::from_did(*pl);
            GammaEstimate gamma_pre = gamma_from_pretreatment(pcells);
            gamma_pre.provenance = GammaProvenance::PlaceboPre;
            if (mode == CorrectionMode::PlaceboPre) {
                corrected.gamma_pre = gamma_pre.value;
                corrected.gamma_post = gamma_pre.value;
                corrected.beta4_corrected =
                    correct_time_invariant_with_gamma(cells, beta4_hat, gamma_pre);
            } else {
                // the placebo's actual series is its own truth, so its post
                // cells identify gamma^A directly
                if (std::fabs(pcells.beta_treated_post) < kDenomTol) {
                    throw Error(ErrorCode::ZeroDenominator,
                                "placebo treated post coefficient is zero");
                }
                GammaEstimate gamma_post;
                gamma_post.value = pcells.beta_control_post / pcells.beta_treated_post;
                gamma_post.provenance = GammaProvenance::PlaceboFull;
                corrected.gamma_pre = gamma_pre.value;
                corrected.gamma_post = gamma_post.value;
                corrected.beta4_corrected = correct_placebo(cells, gamma_post, gamma_pre);
            }
        }
        out.channels.push_back(corrected);
    }
    return out;
}

}  // namespace riskshare
