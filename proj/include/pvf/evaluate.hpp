// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file evaluate.hpp
 * @brief Turns a probability tensor into a risk report.
 *
 * Two implementations share the same per-cell and reduction arithmetic:
 *  - evaluate_reference: straightforward nested loops, single thread. Kept
 *    as the ground truth for testing.
 *  - evaluate: staged OpenMP kernel. Per-cell work (normalization,
 *    stereotype, criterion) is embarrassingly parallel over the |C| x |X|
 *    grid; reductions run per group in fixed context order, so the result is
 *    bit-identical to the reference regardless of thread count.
 *
 * pvf-bench compares the two on synthetic tensors.
 */

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvf/contexts.hpp"
#include "pvf/metrics.hpp"
#include "pvf/schema.hpp"
#include "pvf/tensor.hpp"

namespace pvf {

struct EvalConfig {
  CriterionConfig criterion;
  XDistribution x_dist = XDistribution::Uniform;
};

struct RiskReport {
  OverallRisk overall;  // raw scale; per_group carried inside

  // config echo + provenance
  std::string norm_order;
  std::string group_aggregation;
  double report_scale = 1000.0;
  std::string x_dist;
  std::string schema_hash;
  std::string ctx_hash;
  std::string tensor_hash;
  std::string backend;
  std::string created;

  nlohmann::json to_json() const;
  static RiskReport from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static RiskReport load(const std::filesystem::path& path);
};

/// Serial reference implementation.
RiskReport evaluate_reference(const ProbabilityTensor& tensor,
                              const WordSchema& schema,
                              const WeightedContexts& ctx,
                              const EvalConfig& config);

/// OpenMP-parallel implementation; bit-identical output to the reference.
RiskReport evaluate(const ProbabilityTensor& tensor, const WordSchema& schema,
                    const WeightedContexts& ctx, const EvalConfig& config);

}  // namespace pvf
