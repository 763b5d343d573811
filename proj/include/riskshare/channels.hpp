#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "riskshare/panel.hpp"
#include "riskshare/regress.hpp"

namespace riskshare {

inline constexpr int kNumChannels = 5;

/// Channel order is fixed everywhere: capital markets, international
/// transfers, public savings, private savings, unsmoothed.
extern const std::array<std::string, kNumChannels> kChannelNames;

/// Which left-hand sides to estimate. The full set satisfies
/// sum_k LHS_k = dlog GDP observation by observation; subsets (the shortened
/// World Bank variant) disable the sum identities.
struct ChannelSpec {
    std::vector<int> channels = {0, 1, 2, 3, 4};

    bool full_set() const { return channels.size() == kNumChannels; }
    void validate() const;
};

/// The five channel left-hand sides plus the dlog GDP regressor, stacked as
/// one observation table (unit, year tags set; year = later year of each
/// difference).
struct ChannelData {
    DataTable table;                       // cols: dlog_gdp, lhs_0..lhs_4
    static const std::string kRegressor;   // "dlog_gdp"
    static std::string lhs_name(int channel);
};

/// Builds the channel left-hand sides from a positive panel holding GDP, C,
/// G, NI, DNI. Throws NonPositiveValue.
ChannelData build_channel_lhs(const PanelDataset& panel);

struct ChannelEstimate {
    std::string channel;
    double beta = 0.0;
    double se = 0.0;
    double r_squared = 0.0;
    long n_obs = 0;
};

struct ChannelDecomposition {
    std::vector<ChannelEstimate> estimates;
    VcovKind vcov_kind = VcovKind::Clustered;
    std::string sample;

    double sum_betas() const;
};

/// The five-equation system: each LHS regressed on dlog GDP with time fixed
/// effects. Estimates equal within-year-demeaned covariance ratios.
ChannelDecomposition channel_decomposition(const PanelDataset& panel, const ChannelSpec& spec,
                                           const VcovSpec& vcov);

enum class FeMode { Pooled, GroupSpecific };

/// Per channel, the four slope coefficients of the stacked regression
///   y = b0 + b1 x + b2 g x + b3 p x + b4 g p x + time effects + e
/// with g = 1 for the actual group and p = 1 from the treatment year on.
struct DidCell {
    double estimate = 0.0;
    double se = 0.0;
    double p_value = 1.0;
};

struct DidChannelResult {
    std::string channel;
    std::array<DidCell, 4> beta;  // beta1..beta4
    double r_squared = 0.0;
    long n_obs = 0;
};

struct DidTable {
    std::vector<DidChannelResult> channels;
    FeMode fe_mode = FeMode::Pooled;
    VcovKind vcov_kind = VcovKind::Clustered;
    int treatment_year = 0;

    /// Column sums over the full channel set: (sum b1, sum b2, sum b3, sum b4).
    std::array<double, 4> column_sums() const;
};

struct DidOptions {
    ChannelSpec spec;
    VcovSpec vcov;
    FeMode fe_mode = FeMode::Pooled;
    std::vector<int> exclude_years;  // recession-style observation drops
};

/// Stacked difference-in-differences over matching actual/synthetic panels.
/// Throws GridMismatch when the unit/year grids differ and
/// DegenerateSubsample when any of the four cells is empty.
DidTable did_decomposition(const PanelDataset& actual, const PanelDataset& synthetic,
                           int treatment_year, const DidOptions& options);

struct BeforeAfterChannel {
    std::string channel;
    DidCell gamma1;  // pre level
    DidCell gamma2;  // post change
    double r_squared = 0.0;
    long n_obs = 0;
};

struct BeforeAfterResult {
    std::vector<BeforeAfterChannel> channels;
    int treatment_year = 0;
};

/// Single-group benchmark: y on x and post-interacted x with time effects.
BeforeAfterResult before_after(const PanelDataset& panel, int treatment_year,
                               const ChannelSpec& spec, const VcovSpec& vcov);

struct TrendTestChannel {
    std::string channel;
    DidCell beta2;  // year x treated
    DidCell beta5;  // year x treated x dlog GDP
};

struct TrendTestResult {
    std::vector<TrendTestChannel> channels;
    long n_obs = 0;
};

/// Pre-treatment-only differential-trend regression
///   y = b0 + b1 year + b2 year g + b3 x + b4 year x + b5 year g x + e.
TrendTestResult parallel_trend_test(const PanelDataset& actual, const PanelDataset& synthetic,
                                    int treatment_year, const ChannelSpec& spec,
                                    const VcovSpec& vcov);

struct GrowthVarianceRow {
    std::string cell;  // pre_synthetic, pre_actual, post_synthetic, post_actual
    DidCell growth;
    DidCell variance;
};

struct GrowthVarianceTable {
    std::vector<GrowthVarianceRow> rows;
    long n_growth_obs = 0;
    long n_variance_obs = 0;  // 2 x 2 x #units
    double growth_r_squared = 0.0;
    double variance_r_squared = 0.0;
};

/// Detrends log GDP per (unit, group) with a quadratic trend, then regresses
/// (a) observation-level growth of the detrended series and (b) one
/// log-variance observation per unit x group x period cell on the four-cell
/// dummy design.
GrowthVarianceTable growth_variance_did(const PanelDataset& actual,
                                        const PanelDataset& synthetic, int treatment_year,
                                        const VcovSpec& vcov);

}  // namespace riskshare
