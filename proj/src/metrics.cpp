// SPDX-License-Identifier: Apache-2.0
#include "pvf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pvf {

NormOrder NormOrder::finite(unsigned k) {
  if (k == 0) {
    throw InvalidSpec("norm order must be a positive integer or infinity");
  }
  return NormOrder(k);
}

unsigned NormOrder::k() const {
  if (is_infinite()) {
    throw InvalidSpec("norm order is infinite; no finite k");
  }
  return k_;
}

NormOrder NormOrder::parse(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") {
    return infinity();
  }
  std::size_t pos = 0;
  unsigned long k = 0;
  try {
    k = std::stoul(text, &pos);
  } catch (const std::exception&) {
    throw InvalidSpec("cannot parse norm order: " + text);
  }
  if (pos != text.size() || k == 0 || k > 1u << 20) {
    throw InvalidSpec("cannot parse norm order: " + text);
  }
  return finite(static_cast<unsigned>(k));
}

std::string NormOrder::str() const {
  return is_infinite() ? "inf" : std::to_string(k_);
}

namespace {

void check_distribution(const std::vector<double>& p, bool strictly_positive,
                        const char* what) {
  if (p.empty()) {
    throw InvalidDistribution(std::string(what) + " is empty");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) {
      throw InvalidDistribution(std::string(what) + " has a negative entry");
    }
    if (strictly_positive && v == 0.0) {
      throw InvalidDistribution(std::string(what) + " has a zero entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidDistribution(std::string(what) + " does not sum to 1 (sum=" +
                              std::to_string(sum) + ")");
  }
}

}  // namespace

CategoryDistribution::CategoryDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  check_distribution(probs_, false, "category distribution");
}

UnbiasedReference::UnbiasedReference(std::vector<double> probs)
    : probs_(std::move(probs)) {
  check_distribution(probs_, true, "unbiased reference");
}

UnbiasedReference UnbiasedReference::uniform(std::size_t num_categories) {
  if (num_categories == 0) {
    throw InvalidDistribution("uniform reference needs >= 1 category");
  }
  return UnbiasedReference(
      std::vector<double>(num_categories, 1.0 / static_cast<double>(num_categories)));
}

WeightedContexts::WeightedContexts(std::vector<double> weights)
    : weights_(std::move(weights)) {
  check_distribution(weights_, false, "context weights");
}

WeightedContexts WeightedContexts::uniform(std::size_t num_contexts) {
  if (num_contexts == 0) {
    throw InvalidDistribution("uniform context weights need >= 1 context");
  }
  return WeightedContexts(
      std::vector<double>(num_contexts, 1.0 / static_cast<double>(num_contexts)));
}

CategoryDistribution normalize_categories(
    const std::map<std::string, double>& token_probs,
    const CategoryIndex& categories) {
  if (categories.num_categories == 0) {
    throw InvalidDistribution("category index is empty");
  }
  std::vector<double> mass(categories.num_categories, 0.0);
  for (const auto& [word, prob] : token_probs) {
    auto it = categories.word_to_category.find(word);
    if (it == categories.word_to_category.end()) {
      throw UnknownWord("token '" + word + "' is not in the schema");
    }
    if (!(prob >= 0.0)) {
      throw InvalidDistribution("token '" + word + "' has negative probability");
    }
    mass[it->second] += prob;
  }
  double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (total <= 0.0) {
    throw AllZeroMass("every listed word has zero probability");
  }
  for (double& m : mass) {
    m /= total;
  }
  return CategoryDistribution(std::move(mass));
}

StereotypeVector stereotype(const CategoryDistribution& pred,
                            const UnbiasedReference& reference) {
  if (pred.size() != reference.size()) {
    throw DimensionMismatch("prediction has " + std::to_string(pred.size()) +
                            " categories, reference has " +
                            std::to_string(reference.size()));
  }
  StereotypeVector s;
  s.values.resize(pred.size());
  for (std::size_t y = 0; y < pred.size(); ++y) {
    s.values[y] = pred[y] / reference[y] - 1.0;
  }
  return s;
}

double criterion(const StereotypeVector& s, const CriterionConfig& cfg) {
  return detail::criterion_span(s.values.data(), s.values.size(), cfg);
}

double direction_criterion(const CategoryDistribution& pred, std::size_t g) {
  const std::size_t n = pred.size();
  if (n < 2) {
    throw DimensionMismatch("direction criterion needs >= 2 categories");
  }
  if (g >= n) {
    throw IndexOutOfRange("category index " + std::to_string(g) +
                          " out of range for " + std::to_string(n) +
                          " categories");
  }
  const double off = -1.0 / static_cast<double>(n - 1);
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += pred[i] * (i == g ? 1.0 : off);
  }
  return std::max(dot, 0.0);
}

double discrimination_risk(const std::vector<double>& per_context_criteria,
                           const WeightedContexts& ctx) {
  if (per_context_criteria.size() != ctx.size()) {
    throw DimensionMismatch("criteria/weights length mismatch: " +
                            std::to_string(per_context_criteria.size()) +
                            " vs " + std::to_string(ctx.size()));
  }
  return detail::weighted_mean_ratio(per_context_criteria.data(),
                                     ctx.weights().data(), ctx.size());
}

StereotypeVector mean_stereotype(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx) {
  if (per_context_stereotypes.size() != ctx.size()) {
    throw DimensionMismatch("stereotypes/weights length mismatch");
  }
  if (per_context_stereotypes.empty()) {
    throw DimensionMismatch("no contexts");
  }
  const std::size_t y_len = per_context_stereotypes.front().values.size();
  std::vector<double> flat;
  flat.reserve(per_context_stereotypes.size() * y_len);
  for (const auto& s : per_context_stereotypes) {
    if (s.values.size() != y_len) {
      throw DimensionMismatch("stereotype vectors have unequal lengths");
    }
    flat.insert(flat.end(), s.values.begin(), s.values.end());
  }
  StereotypeVector mean;
  mean.values.resize(y_len);
  detail::weighted_mean_rows(flat.data(), ctx.weights().data(),
                             per_context_stereotypes.size(), y_len,
                             mean.values.data());
  return mean;
}

double prejudice_risk(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx, const CriterionConfig& cfg) {
  return criterion(mean_stereotype(per_context_stereotypes, ctx), cfg);
}

RiskDecomposition decompose(
    const std::vector<StereotypeVector>& per_context_stereotypes,
    const WeightedContexts& ctx, const CriterionConfig& cfg) {
  if (per_context_stereotypes.size() != ctx.size()) {
    throw DimensionMismatch("stereotypes/weights length mismatch");
  }
  if (per_context_stereotypes.empty()) {
    throw DimensionMismatch("no contexts");
  }
  const std::size_t y_len = per_context_stereotypes.front().values.size();
  std::vector<double> flat;
  std::vector<double> crit(per_context_stereotypes.size());
  flat.reserve(per_context_stereotypes.size() * y_len);
  for (std::size_t c = 0; c < per_context_stereotypes.size(); ++c) {
    const auto& s = per_context_stereotypes[c];
    if (s.values.size() != y_len) {
      throw DimensionMismatch("stereotype vectors have unequal lengths");
    }
    flat.insert(flat.end(), s.values.begin(), s.values.end());
    crit[c] = detail::criterion_span(s.values.data(), y_len, cfg);
  }
  return detail::decompose_span(crit.data(), flat.data(),
                                per_context_stereotypes.size(), y_len,
                                ctx.weights().data(), cfg);
}

OverallRisk overall(const std::map<std::string, RiskDecomposition>& per_group,
                    const std::map<std::string, double>& x_weights,
                    const CriterionConfig& cfg) {
  if (per_group.empty()) {
    throw WeightMismatch("no groups to aggregate");
  }
  if (per_group.size() != x_weights.size()) {
    throw WeightMismatch("x-distribution covers " +
                         std::to_string(x_weights.size()) + " groups, " +
                         std::to_string(per_group.size()) + " present");
  }
  double weight_sum = 0.0;
  for (const auto& [id, w] : x_weights) {
    if (!per_group.contains(id)) {
      throw WeightMismatch("x-distribution names unknown group '" + id + "'");
    }
    if (!(w >= 0.0)) {
      throw WeightMismatch("negative weight for group '" + id + "'");
    }
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > kSumTolerance) {
    throw WeightMismatch("x-distribution does not sum to 1");
  }

  OverallRisk out;
  out.per_group = per_group;
  if (cfg.group_aggregation == GroupAggregation::Mean) {
    double num_r = 0.0, num_p = 0.0, den = 0.0;
    for (const auto& [id, risk] : per_group) {
      const double w = x_weights.at(id);
      num_r += w * risk.discrimination;
      num_p += w * risk.prejudice;
      den += w;
    }
    out.R = num_r / den;
    out.R_p = num_p / den;
    out.R_v = out.R - out.R_p;
  } else {
    // Worst case per index; the three maxima may come from different groups.
    out.R = out.R_p = out.R_v = 0.0;
    bool first = true;
    for (const auto& [id, risk] : per_group) {
      if (first) {
        out.R = risk.discrimination;
        out.R_p = risk.prejudice;
        out.R_v = risk.volatility;
        first = false;
      } else {
        out.R = std::max(out.R, risk.discrimination);
        out.R_p = std::max(out.R_p, risk.prejudice);
        out.R_v = std::max(out.R_v, risk.volatility);
      }
    }
  }
  return out;
}

double scale_for_report(double v, const CriterionConfig& cfg) {
  return v * cfg.report_scale;
}

namespace detail {

double weighted_mean_ratio(const double* values, const double* weights,
                           std::size_t n) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  if (den <= 0.0) {
    throw InvalidDistribution("context weights have zero total mass");
  }
  return num / den;
}

void weighted_mean_rows(const double* stereotypes, const double* weights,
                        std::size_t num_rows, std::size_t row_len,
                        double* out) {
  double den = 0.0;
  for (std::size_t c = 0; c < num_rows; ++c) {
    den += weights[c];
  }
  if (den <= 0.0) {
    throw InvalidDistribution("context weights have zero total mass");
  }
  for (std::size_t y = 0; y < row_len; ++y) {
    double num = 0.0;
    for (std::size_t c = 0; c < num_rows; ++c) {
      num += weights[c] * stereotypes[c * row_len + y];
    }
    out[y] = num / den;
  }
}

double criterion_span(const double* values, std::size_t n,
                      const CriterionConfig& cfg) {
  if (cfg.norm_order.is_infinite()) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] > m) m = values[i];
    }
    return m;
  }
  const unsigned k = cfg.norm_order.k();
  if (k == 1) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] > 0.0) sum += values[i];
    }
    return sum;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] > 0.0) sum += std::pow(values[i], static_cast<double>(k));
  }
  return sum == 0.0 ? 0.0 : std::pow(sum, 1.0 / static_cast<double>(k));
}

RiskDecomposition decompose_span(const double* per_context_criteria,
                                 const double* stereotypes_row_major,
                                 std::size_t num_contexts,
                                 std::size_t num_categories,
                                 const double* weights,
                                 const CriterionConfig& cfg) {
  RiskDecomposition out;
  out.discrimination =
      weighted_mean_ratio(per_context_criteria, weights, num_contexts);
  std::vector<double> mean(num_categories);
  weighted_mean_rows(stereotypes_row_major, weights, num_contexts,
                     num_categories, mean.data());
  out.prejudice = criterion_span(mean.data(), num_categories, cfg);
  out.volatility = out.discrimination - out.prejudice;
  return out;
}

}  // namespace detail

}  // namespace pvf
