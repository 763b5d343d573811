#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riskshare/channels.hpp"

namespace riskshare {

/// The four cell slopes behind one channel's DiD estimate. Tilde marks the
/// control cells, which are measured with error when the control is a
/// synthetic series.
struct CellCoefficients {
    double beta_treated_pre = 0.0;    // beta^TB
    double beta_treated_post = 0.0;   // beta^TA
    double beta_control_pre = 0.0;    // beta~^CB
    double beta_control_post = 0.0;   // beta~^CA
    std::string channel;

    /// Recovers the cells from one channel's stacked-DiD coefficients:
    /// control-pre = b1, treated-pre = b1+b2, control-post = b1+b3,
    /// treated-post = b1+b2+b3+b4.
    static CellCoefficients from_did(const DidChannelResult& channel);
};

enum class GammaProvenance { TreatedPre, PlaceboPre, PlaceboFull };

struct GammaEstimate {
    double value = 1.0;
    GammaProvenance provenance = GammaProvenance::TreatedPre;
};

/// gamma = beta~^CB / beta^TB. Throws ZeroDenominator.
GammaEstimate gamma_from_pretreatment(const CellCoefficients& cells);

/// Time-invariant correction:
/// beta4 = beta4_hat - (beta~^CA - beta~^CB) (beta^TB - beta~^CB) / beta~^CB.
double correct_time_invariant(const CellCoefficients& cells, double beta4_hat);

/// Same formula with an externally estimated gamma (e.g. from the placebo
/// pre-period): beta4 = beta4_hat - (beta~^CA - beta~^CB) (1/gamma - 1).
double correct_time_invariant_with_gamma(const CellCoefficients& cells, double beta4_hat,
                                         const GammaEstimate& gamma);

/// Placebo correction with period-specific gammas:
/// beta4 = beta^TA - beta~^CA/gamma^A - beta^TB + beta~^CB/gamma^B.
double correct_placebo(const CellCoefficients& cells, const GammaEstimate& gamma_post,
                       const GammaEstimate& gamma_pre);

struct SignBiasReport {
    double bias = 0.0;          // -beta~^CA (1/gamma^A - 1)
    std::string sign;           // "positive" | "negative" | "zero" | "indeterminate"
    bool applicable = false;    // gamma^A in (0, 1]
};

/// Sign bound under the weak one-sided measurement-error assumption.
SignBiasReport sign_bias(double beta_control_post, double gamma_post);

enum class CorrectionMode { TreatedPre, PlaceboPre, PlaceboFull };

struct CorrectedChannel {
    std::string channel;
    double beta4_raw = 0.0;
    double beta4_corrected = 0.0;
    double gamma_pre = 1.0;
    double gamma_post = 1.0;  // == gamma_pre except in PlaceboFull mode
};

struct CorrectedTable {
    std::vector<CorrectedChannel> channels;
    CorrectionMode mode = CorrectionMode::TreatedPre;
};

/// Per-channel corrected beta4 values. TreatedPre draws gamma from the euro
/// table's own pre-period cells; the placebo modes need the placebo DiD
/// table (gamma^B from its pre cells, gamma^A — PlaceboFull only — from its
/// post cells, where the placebo's actual series is its own truth).
CorrectedTable corrected_table(const DidTable& did, CorrectionMode mode,
                               const std::optional<DidTable>& placebo);

}  // namespace riskshare
