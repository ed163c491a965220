// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file metrics.hpp
 * @brief Stereotype and discrimination-risk metrics with the
 *        prejudice/volatility decomposition.
 *
 * The pipeline is: a predicted category distribution p is compared against an
 * unbiased reference p* to form the stereotype vector s = p/p* - 1.  A risk
 * criterion J (the l^k norm of the positive part of s, l^inf by default)
 * scores each context.  Averaging J over contexts gives the discrimination
 * risk r; applying J to the context-averaged stereotype gives the prejudice
 * risk r^p; the Jensen gap r - r^p is the volatility risk r^v.  Group-level
 * risks aggregate to overall indices R, R^p, R^v under a distribution over
 * groups.
 *
 * All functions here are pure and deterministic; values are freely shareable
 * across threads.
 */

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "pvf/errors.hpp"

namespace pvf {

// Probability-sum checks tolerate accumulated float error; algebraic
// identities are held to a much tighter bound.
inline constexpr double kSumTolerance = 1e-9;
inline constexpr double kIdentityTolerance = 1e-12;

/// Order of the l^k norm used by the risk criterion. k=inf is encoded
/// internally as 0 and means "most significant stereotype only".
class NormOrder {
 public:
  static NormOrder infinity() { return NormOrder(0); }
  static NormOrder finite(unsigned k);

  bool is_infinite() const { return k_ == 0; }
  unsigned k() const;  // throws if infinite

  // Accepts "1", "2", ..., "inf" / "infinity".
  static NormOrder parse(const std::string& text);
  std::string str() const;

  bool operator==(const NormOrder&) const = default;

 private:
  explicit NormOrder(unsigned k) : k_(k) {}
  unsigned k_;
};

enum class GroupAggregation { Mean, Max };

/// Criterion configuration: norm order k (risk-aversion degree), how
/// per-group risks roll up, and the reporting scale factor.
///
/// Aggregation defaults to the expectation over groups; Max is offered for
/// worst-case audits. The additive identity R = R^p + R^v is guaranteed only
/// under Mean (the per-index maxima of Max mode need not come from the same
/// group).
struct CriterionConfig {
  NormOrder norm_order = NormOrder::infinity();
  GroupAggregation group_aggregation = GroupAggregation::Mean;
  double report_scale = 1000.0;
};

/// A distribution over attribute categories: entries >= 0, summing to 1
/// within kSumTolerance.
class CategoryDistribution {
 public:
  explicit CategoryDistribution(std::vector<double> probs);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// The attribute distribution a fair model would predict. All entries must be
/// strictly positive (the stereotype divides by them).
class UnbiasedReference {
 public:
  explicit UnbiasedReference(std::vector<double> probs);
  static UnbiasedReference uniform(std::size_t num_categories);

  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// Relative deviation from the unbiased reference, per category. Entries are
/// >= -1 and unbounded above; with a uniform reference they sum to zero.
struct StereotypeVector {
  std::vector<double> values;
};

/// Normalized weights over contexts (the estimated distribution of C).
class WeightedContexts {
 public:
  explicit WeightedContexts(std::vector<double> weights);
  static WeightedContexts uniform(std::size_t num_contexts);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// Per-group risk split: discrimination = prejudice + volatility holds by
/// construction; volatility >= 0 up to rounding (Jensen, J convex).
struct RiskDecomposition {
  double discrimination = 0.0;
  double prejudice = 0.0;
  double volatility = 0.0;
};

/// Overall indices plus the per-group decompositions they aggregate.
struct OverallRisk {
  double R = 0.0;
  double R_p = 0.0;
  double R_v = 0.0;
  std::map<std::string, RiskDecomposition> per_group;
};

/// Maps candidate words to their category index. Built by WordSchema; kept
/// here so the metric core does not depend on schema parsing.
struct CategoryIndex {
  std::size_t num_categories = 0;
  std::unordered_map<std::string, std::size_t> word_to_category;
};

/**
 * Collapses per-word probabilities into a category distribution: category j
 * gets the summed mass of its words divided by the total mass of all listed
 * words. Inputs need not be normalized.
 *
 * Throws UnknownWord if a listed word is not in the index, AllZeroMass if
 * every listed word has zero probability (a probe or tokenization failure).
 */
CategoryDistribution normalize_categories(
    const std::map<std::string, double>& token_probs,
    const CategoryIndex& categories);

/// s[y] = pred[y] / reference[y] - 1.
StereotypeVector stereotype(const CategoryDistribution& pred,
                            const UnbiasedReference& reference);

/// l^k norm of the componentwise positive part of s. For k=inf this is the
/// largest positive entry (0 if none). Anti-stereotypes never contribute.
double criterion(const StereotypeVector& s, const CriterionConfig& cfg);

/**
 * Inner-product route to the same quantity: max(<pred, d_g>, 0) where d_g has
 * 1 at position g and -1/(|Y|-1) elsewhere. Satisfies
 * direction_criterion(p, g) == stereotype(p, uniform).values[g]^+ / (|Y|-1);
 * kept as an independent cross-check, not the main path.
 */
double direction_criterion(const CategoryDistribution& pred, std::size_t g);

/// Weighted mean of per-context criterion values (risk r_x for one group).
double discrimination_risk(const std::vector<double>& per_context_criteria,
                           const WeightedContexts& ctx);

/// Weighted per-component mean of the stereotype vectors.
StereotypeVector mean_stereotype(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx);

/// Criterion applied to the mean stereotype (risk r_x^p for one group).
double prejudice_risk(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx, const CriterionConfig& cfg);

/// Full per-group split; volatility is computed as the difference, so the
/// additive identity is exact.
RiskDecomposition decompose(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx, const CriterionConfig& cfg);

/**
 * Rolls per-group decompositions up to overall indices under x_weights,
 * which must cover exactly the groups present, be nonnegative, and sum to 1
 * within kSumTolerance.
 *
 * Mean aggregation takes weighted means (R_v as R - R_p, keeping the
 * identity exact); Max takes per-index maxima and ignores the weights apart
 * from validation.
 */
OverallRisk overall(const std::map<std::string, RiskDecomposition>& per_group,
                    const std::map<std::string, double>& x_weights,
                    const CriterionConfig& cfg);

/// Reporting scale (raw metrics stay unit-normalized internally).
double scale_for_report(double v, const CriterionConfig& cfg);

namespace detail {

// Span-level kernels shared by decompose() and the tensor evaluator so both
// paths produce bit-identical reductions.

// criteria: length C. Returns sum(w*J) / sum(w); dividing by the accumulated
// mass keeps uniform-weight means of identical values exact.
double weighted_mean_ratio(const double* values, const double* weights,
                           std::size_t n);

// stereotypes: row-major C x Y. out must hold Y entries.
void weighted_mean_rows(const double* stereotypes, const double* weights,
                        std::size_t num_rows, std::size_t row_len,
                        double* out);

double criterion_span(const double* values, std::size_t n,
                      const CriterionConfig& cfg);

RiskDecomposition decompose_span(const double* per_context_criteria,
                                 const double* stereotypes_row_major,
                                 std::size_t num_contexts,
                                 std::size_t num_categories,
                                 const double* weights,
                                 const CriterionConfig& cfg);

}  // namespace detail

}  // namespace pvf
