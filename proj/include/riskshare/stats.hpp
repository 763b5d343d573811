#pragma once

#include <vector>

namespace riskshare {

/// Regularized incomplete beta function I_x(a, b), via the Lentz continued
/// fraction. Accurate to ~1e-14 for the moderate (a, b) used by t tests.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a t statistic with df degrees of freedom.
double student_t_pvalue(double t, double df);

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);
double sample_sd(const std::vector<double>& xs);

/// Kolmogorov-Smirnov distance between the empirical CDF of xs and the
/// Uniform(0,1) CDF. Used by the permutation-null acceptance check.
double ks_distance_uniform(std::vector<double> xs);

}  // namespace riskshare
