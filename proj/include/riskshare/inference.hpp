#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/channels.hpp"
#include "riskshare/panel.hpp"
#include "riskshare/scm.hpp"

namespace riskshare {

struct PermutationConfig {
    int n_treated = 0;     // pseudo-treated drawn per re-assignment
    int n_perm = 0;        // number of re-assignments
    int treatment_year = 0;
    std::uint64_t seed = 0;
    int channel = 4;       // default: unsmoothed
    ScmConfig scm;
    VcovSpec vcov;
    FeMode fe_mode = FeMode::Pooled;
    /// Real treated units. When empty, the "true" assignment is itself drawn
    /// from the seed (permutation index 0 of the substream scheme) — the
    /// exchangeable-null experiment.
    std::vector<std::string> true_treated;
    /// Units never eligible for pseudo-treatment draws (beyond true_treated,
    /// which is always excluded from the draw pool).
    std::vector<std::string> draw_exclude;
    unsigned jobs = 1;
};

struct PermutationResult {
    std::vector<double> r_values;  // one per completed permutation; +inf allowed
    std::vector<int> skipped;      // permutation indices whose SCM fit failed
    double r_true = 0.0;
    double p_value = 0.0;          // (1/n_perm) * #{ r_i >= r_true }
    int n_perm = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> true_treated;
};

/// Placebo-in-space permutation test on the r = |b4/b2| statistic of the
/// chosen channel. Each re-assignment draws n_treated units with replacement
/// from the pool (duplicates become distinct pseudo-units with distinct
/// clusters), builds their synthetic counterparts against the remaining pool,
/// estimates the stacked DiD for the channel, and records r. |b2| < 1e-12
/// maps r to +infinity (counted in the right tail). Deterministic given the
/// seed and independent of worker count.
PermutationResult permutation_test(const PanelDataset& pool, const PermutationConfig& config);

struct PlaceboReport {
    DidTable did;
    std::vector<bool> significant_at_5pct;  // per channel, on beta4
    std::vector<std::string> pseudo_treated;
};

/// Full synthetic build plus stacked DiD for never-treated units. With
/// leave_one_out each pseudo-treated unit is matched from every pool unit
/// except itself (the whole-pool placebo); otherwise all fits share the
/// donor pool `pool minus pseudo_treated`, which must be nonempty.
PlaceboReport placebo_study(const PanelDataset& pool,
                            const std::vector<std::string>& pseudo_treated,
                            int treatment_year, const ScmConfig& scm, const VcovSpec& vcov,
                            unsigned jobs = 1, bool leave_one_out = false);

}  // namespace riskshare
