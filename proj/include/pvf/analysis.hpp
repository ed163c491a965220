// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file analysis.hpp
 * @brief Post-metric analytics: weighted least squares against social
 *        factors, distribution summaries of per-group risks, and
 *        model-vs-model comparison tables.
 */

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvf/errors.hpp"
#include "pvf/metrics.hpp"

namespace pvf {

struct SocialFactorRow {
  std::string group_id;
  double factor_value = 0.0;
  double weight = 0.0;  // population
};

/// CSV with header group_id,factor_value,weight.
std::vector<SocialFactorRow> load_social_factors(
    const std::filesystem::path& path);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n = 0;  // points with positive weight
};

/**
 * Closed-form weighted least squares for y = a + b x, minimizing
 * sum_i w_i (y_i - a - b x_i)^2 via the centered normal equations.
 * r_squared is the weighted coefficient of determination; it is 0 by
 * convention when y is constant.
 *
 * Throws LengthMismatch (sizes unequal or < 3, or weights unusable) and
 * DegenerateDesign (x constant among positively weighted points).
 */
RegressionResult wls_fit(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::vector<double>& weights);

struct DistributionSummary {
  double mean = 0.0;
  double std_dev = 0.0;          // sample std, n-1 denominator
  double excess_kurtosis = 0.0;  // m4/m2^2 - 3, population moments
  std::vector<std::uint64_t> histogram;  // fixed equal-width bins
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;  // all values equal; kurtosis reported as 0
};

/// Throws TooFewSamples for fewer than 2 values. 20 bins over [min, max].
DistributionSummary summarize_distribution(const std::vector<double>& values,
                                           std::size_t num_bins = 20);

struct ComparisonRow {
  std::string model_id;
  double r_scaled = 0.0;
  double r_p_scaled = 0.0;
  double r_v_scaled = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // sorted by R desc, model_id asc
  // per-column extremes, for emphasis markers
  std::string worst_r, worst_r_p, worst_r_v;
  std::string best_r, best_r_p, best_r_v;
};

/// Rows sorted by scaled R descending, ties broken by model id.
ComparisonTable compare_models(
    const std::vector<std::pair<std::string, OverallRisk>>& reports,
    double scale = 1000.0);

/// Plain-text table, two decimals, worst cell wrapped in ** and best in __.
std::string render_comparison(const ComparisonTable& table);

/// CSV: model_id,R,R_p,R_v with two decimals.
std::string comparison_csv(const ComparisonTable& table);

}  // namespace pvf
