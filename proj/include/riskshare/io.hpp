#pragma once

#include <string>
#include <vector>

#include "riskshare/biascorr.hpp"
#include "riskshare/channels.hpp"
#include "riskshare/inference.hpp"
#include "riskshare/scm.hpp"

namespace riskshare {

inline constexpr const char* kVersion = "0.1.0";

/// Table emitters. CSV layouts follow the published table shapes: DiD tables
/// have one row per (period, group) cell and one column per channel; weight
/// matrices are donor x treated grids in percent with one decimal, zeros
/// printed as ".". Every emitter takes the run's config hash and embeds it
/// as a trailing comment row (CSV) or a "config_hash" field (JSON).

std::string did_table_csv(const DidTable& table, const std::string& config_hash);
std::string did_table_json(const DidTable& table, const std::string& config_hash);

std::string decomposition_csv(const ChannelDecomposition& d, const std::string& config_hash);
std::string decomposition_json(const ChannelDecomposition& d, const std::string& config_hash);

std::string before_after_csv(const BeforeAfterResult& r, const std::string& config_hash);
std::string before_after_json(const BeforeAfterResult& r, const std::string& config_hash);

std::string trend_test_csv(const TrendTestResult& r, const std::string& config_hash);
std::string trend_test_json(const TrendTestResult& r, const std::string& config_hash);

std::string growth_variance_csv(const GrowthVarianceTable& t, const std::string& config_hash);
std::string growth_variance_json(const GrowthVarianceTable& t, const std::string& config_hash);

std::string weight_matrix_csv(const CounterfactualResult& r, const std::string& variable,
                              const std::string& config_hash);
std::string weights_json(const CounterfactualResult& r, const std::string& config_hash);

std::string permutation_csv(const PermutationResult& r, const std::string& config_hash);
std::string permutation_json(const PermutationResult& r, const std::string& config_hash);

std::string placebo_json(const PlaceboReport& r, const std::string& config_hash);

std::string corrected_table_csv(const CorrectedTable& t, const std::string& config_hash);
std::string corrected_table_json(const CorrectedTable& t, const std::string& config_hash);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace riskshare
