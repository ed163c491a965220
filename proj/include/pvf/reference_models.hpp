// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file reference_models.hpp
 * @brief Analytic baseline generators whose exact risk values anchor the
 *        metric scale.
 *
 * Three baselines:
 *  - IdeallyUnbiased: every (context, group) cell is the uniform
 *    distribution; all risk indices are exactly 0.
 *  - Stereotyped: each group always predicts its assigned category with
 *    certainty; discrimination and prejudice are maximal, volatility 0.
 *  - RandomlyStereotyped: each cell independently predicts a uniformly
 *    random category with certainty; discrimination and volatility are
 *    maximal while prejudice vanishes as the number of contexts grows
 *    (finite-sample prejudice is O(1/sqrt(|C|))).
 *
 * Generation is deterministic: the random baseline derives a stream per
 * (seed, context, group) cell, so tensors are reproducible regardless of
 * evaluation order.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pvf/metrics.hpp"
#include "pvf/schema.hpp"
#include "pvf/tensor.hpp"

namespace pvf {

enum class BaselineKind { IdeallyUnbiased, Stereotyped, RandomlyStereotyped };

BaselineKind parse_baseline_kind(const std::string& text);
std::string to_string(BaselineKind kind);

struct BaselineSpec {
  BaselineKind kind = BaselineKind::IdeallyUnbiased;
  std::size_t num_groups = 1;
  std::size_t num_categories = 2;
  std::size_t num_contexts = 1;
  std::uint64_t seed = 0;  // RandomlyStereotyped only
  // Stereotyped only; defaults to group i -> category i mod |Y|.
  std::optional<std::map<std::size_t, std::size_t>> stereotype_assignment;
};

/// Throws InvalidSpec on out-of-range fields or a stereotype assignment on a
/// non-Stereotyped kind.
void validate(const BaselineSpec& spec);

/// Cell (context c, group g) lives at index c * num_groups + g.
std::vector<CategoryDistribution> generate(const BaselineSpec& spec);

/// Same cells serialized in the probe tensor format, with synthetic ids
/// (groups "g0"..., contexts "c0"..., one word "y<j>" per category).
ProbabilityTensor baseline_tensor(const BaselineSpec& spec);

/// Schema matching baseline_tensor's synthetic words, so the standard audit
/// path can consume baseline tensors unchanged.
WordSchema baseline_schema(const BaselineSpec& spec);

struct ExpectedMetrics {
  double R = 0.0;
  double R_p = 0.0;
  double R_v = 0.0;
};

/**
 * Closed-form (R, R^p, R^v) in raw scale, exact in the infinite-context
 * limit, for k=inf with uniform reference and uniform group weights:
 *   IdeallyUnbiased     -> (0, 0, 0)
 *   Stereotyped         -> (|Y|-1, |Y|-1, 0)
 *   RandomlyStereotyped -> (|Y|-1, 0, |Y|-1)
 */
ExpectedMetrics expected_metrics(const BaselineSpec& spec);

}  // namespace pvf
