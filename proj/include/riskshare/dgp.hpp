#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "riskshare/panel.hpp"

namespace riskshare {

/// Simulation harness with known ground truth: planted donor weights,
/// planted channel covariance shares, planted treatment effects, and planted
/// measurement error. Population values are exact by construction, which is
/// what makes the estimators testable without real data.
struct DgpConfig {
    int n_treated = 11;
    int n_donors = 13;
    int first_year = 1990;
    int last_year = 2018;
    int treatment_year = 1999;

    /// Planted donor weights, one row per treated unit. Empty: each treated
    /// unit gets a deterministic sparse simplex point from the seed.
    Eigen::MatrixXd planted_weights;

    /// Population covariance shares of the five channels; must sum to 1.
    std::array<double, 5> channel_shares = {0.1, 0.1, 0.2, 0.3, 0.3};
    /// Post-treatment share shift for treated units only; must sum to 0.
    std::array<double, 5> treatment_effect = {0, 0, 0, 0, 0};
    /// Post-treatment share drift common to all units (the counterfactual
    /// trend); must sum to 0.
    std::array<double, 5> control_trend = {0, 0, 0, 0, 0};

    double drift = 0.02;            // mean of dlog GDP
    double factor_sd = 0.015;       // common factor innovation sd
    double idio_sd = 0.025;         // unit-specific innovation sd
    double channel_noise_sd = 0.008;  // orthogonal channel allocation noise
    double pre_match_noise = 0.0;   // relative noise on treated pre-treatment levels

    /// Measurement-error planting (simulate_me_panels): attenuation factor on
    /// me_channel's loading in the control panel, with the displaced share
    /// mass moved to me_dump_channel so the accounting identity still holds.
    double me_gamma = 1.0;
    int me_channel = 4;
    int me_dump_channel = 3;

    std::uint64_t seed = 1;

    void validate() const;  // throws InfeasibleShares on bad shares/scales
};

struct TruthRecord {
    std::vector<std::string> treated;
    std::vector<std::string> donors;
    Eigen::MatrixXd weights;  // n_treated x n_donors
    std::array<double, 5> channel_shares{};
    std::array<double, 5> treatment_effect{};
    std::array<double, 5> control_trend{};
    double me_gamma = 1.0;
    int me_channel = 4;
    std::uint64_t seed = 0;
};

struct SimulationResult {
    PanelDataset panel;  // treated + donors, source = "simulated"
    TruthRecord truth;
};

/// Donor national accounts follow a factor-plus-idiosyncratic log growth
/// process whose five-channel allocation carries the planted shares; treated
/// units are the planted convex combination of donor levels pre-treatment
/// (optionally noised) and continue with their own innovations — shares
/// shifted by the planted effect — afterwards. Bit-identical per seed.
SimulationResult simulate_panel(const DgpConfig& config);

struct MeExperiment {
    PanelDataset actual;    // treated units, true structure
    PanelDataset control;   // same unit names, counterfactual measured with error
    TruthRecord truth;
};

/// Paired panels for the measurement-error machinery: the control panel's
/// me_channel loading is attenuated by me_gamma in both periods (time
/// invariant), so gamma estimates and corrections have a known target.
MeExperiment simulate_me_panels(const DgpConfig& config);

std::string truth_to_json(const TruthRecord& truth);

}  // namespace riskshare
