// SPDX-License-Identifier: Apache-2.0
#include "pvf/evaluate.hpp"

#include <exception>
#include <fstream>
#include <mutex>

namespace pvf {

namespace {

struct EvalBuffers {
  std::size_t num_contexts = 0;
  std::size_t num_groups = 0;
  std::size_t num_categories = 0;
  // J[c * G + g]; S[(c * G + g) * Y + y]
  std::vector<double> criteria;
  std::vector<double> stereotypes;
};

// Per-cell stage: normalize token probabilities, form the stereotype against
// the uniform reference, score it. Identical arithmetic on both paths.
void eval_cell(const ProbabilityTensor& tensor, const CategoryIndex& index,
               const UnbiasedReference& reference, const CriterionConfig& cfg,
               std::size_t c, std::size_t g, EvalBuffers& buf) {
  const auto pred = normalize_categories(tensor.cell(c, g).probs, index);
  const auto s = stereotype(pred, reference);
  const std::size_t base = (c * buf.num_groups + g) * buf.num_categories;
  for (std::size_t y = 0; y < buf.num_categories; ++y) {
    buf.stereotypes[base + y] = s.values[y];
  }
  buf.criteria[c * buf.num_groups + g] =
      detail::criterion_span(s.values.data(), s.values.size(), cfg);
}

// Group stage: gather this group's column and run the shared span kernel.
RiskDecomposition eval_group(const EvalBuffers& buf,
                             const WeightedContexts& ctx,
                             const CriterionConfig& cfg, std::size_t g,
                             std::vector<double>& crit_col,
                             std::vector<double>& stereo_col) {
  const std::size_t C = buf.num_contexts;
  const std::size_t Y = buf.num_categories;
  for (std::size_t c = 0; c < C; ++c) {
    crit_col[c] = buf.criteria[c * buf.num_groups + g];
    const std::size_t base = (c * buf.num_groups + g) * Y;
    for (std::size_t y = 0; y < Y; ++y) {
      stereo_col[c * Y + y] = buf.stereotypes[base + y];
    }
  }
  return detail::decompose_span(crit_col.data(), stereo_col.data(), C, Y,
                                ctx.weights().data(), cfg);
}

RiskReport assemble_report(const ProbabilityTensor& tensor,
                           const WordSchema& schema, const EvalConfig& config,
                           std::map<std::string, RiskDecomposition> per_group) {
  RiskReport report;
  report.overall =
      overall(per_group, schema.x_weights(config.x_dist), config.criterion);
  report.norm_order = config.criterion.norm_order.str();
  report.group_aggregation =
      config.criterion.group_aggregation == GroupAggregation::Mean ? "mean"
                                                                   : "max";
  report.report_scale = config.criterion.report_scale;
  report.x_dist = to_string(config.x_dist);
  report.schema_hash = tensor.meta().schema_hash;
  report.ctx_hash = tensor.meta().ctx_hash;
  report.backend = tensor.meta().backend;
  report.created = utc_timestamp();
  return report;
}

void check_axes(const ProbabilityTensor& tensor, const WordSchema& schema,
                const WeightedContexts& ctx) {
  if (tensor.num_contexts() != ctx.size()) {
    throw WeightMismatch("tensor has " +
                         std::to_string(tensor.num_contexts()) +
                         " contexts, weights cover " +
                         std::to_string(ctx.size()));
  }
  if (tensor.num_groups() != schema.num_groups()) {
    throw WeightMismatch("tensor has " + std::to_string(tensor.num_groups()) +
                         " groups, schema declares " +
                         std::to_string(schema.num_groups()));
  }
  for (std::size_t g = 0; g < tensor.num_groups(); ++g) {
    if (tensor.group_ids()[g] != schema.groups()[g].id) {
      throw WeightMismatch("tensor group '" + tensor.group_ids()[g] +
                           "' does not match schema group '" +
                           schema.groups()[g].id + "'");
    }
  }
}

}  // namespace

RiskReport evaluate_reference(const ProbabilityTensor& tensor,
                              const WordSchema& schema,
                              const WeightedContexts& ctx,
                              const EvalConfig& config) {
  check_axes(tensor, schema, ctx);
  const std::size_t C = tensor.num_contexts();
  const std::size_t G = tensor.num_groups();
  const std::size_t Y = schema.num_categories();

  EvalBuffers buf{C, G, Y, std::vector<double>(C * G),
                  std::vector<double>(C * G * Y)};
  const auto reference = UnbiasedReference::uniform(Y);
  const auto& index = schema.category_index();

  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t g = 0; g < G; ++g) {
      eval_cell(tensor, index, reference, config.criterion, c, g, buf);
    }
  }

  std::map<std::string, RiskDecomposition> per_group;
  std::vector<double> crit_col(C), stereo_col(C * Y);
  for (std::size_t g = 0; g < G; ++g) {
    per_group[tensor.group_ids()[g]] =
        eval_group(buf, ctx, config.criterion, g, crit_col, stereo_col);
  }
  return assemble_report(tensor, schema, config, std::move(per_group));
}

RiskReport evaluate(const ProbabilityTensor& tensor, const WordSchema& schema,
                    const WeightedContexts& ctx, const EvalConfig& config) {
  check_axes(tensor, schema, ctx);
  const std::size_t C = tensor.num_contexts();
  const std::size_t G = tensor.num_groups();
  const std::size_t Y = schema.num_categories();

  EvalBuffers buf{C, G, Y, std::vector<double>(C * G),
                  std::vector<double>(C * G * Y)};
  const auto reference = UnbiasedReference::uniform(Y);
  const auto& index = schema.category_index();

  // Exceptions must not escape an OpenMP region; capture the first one.
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;

#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t g = 0; g < G; ++g) {
      try {
        eval_cell(tensor, index, reference, config.criterion, c, g, buf);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<RiskDecomposition> group_risks(G);
#pragma omp parallel
  {
    std::vector<double> crit_col(C), stereo_col(C * Y);
#pragma omp for schedule(static)
    for (std::size_t g = 0; g < G; ++g) {
      try {
        group_risks[g] =
            eval_group(buf, ctx, config.criterion, g, crit_col, stereo_col);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  std::map<std::string, RiskDecomposition> per_group;
  for (std::size_t g = 0; g < G; ++g) {
    per_group[tensor.group_ids()[g]] = group_risks[g];
  }
  return assemble_report(tensor, schema, config, std::move(per_group));
}

nlohmann::json RiskReport::to_json() const {
  nlohmann::json j;
  j["meta"] = {{"schema_hash", schema_hash}, {"ctx_hash", ctx_hash},
               {"tensor_hash", tensor_hash}, {"backend", backend},
               {"created", created}};
  j["config"] = {{"k", norm_order},
                 {"group_aggregation", group_aggregation},
                 {"scale", report_scale},
                 {"x_dist", x_dist}};
  j["per_group"] = nlohmann::json::array();
  for (const auto& [id, risk] : overall.per_group) {
    j["per_group"].push_back(
        {{"group_id", id},
         {"r", risk.discrimination},
         {"r_p", risk.prejudice},
         {"r_v", risk.volatility},
         {"r_scaled", risk.discrimination * report_scale},
         {"r_p_scaled", risk.prejudice * report_scale},
         {"r_v_scaled", risk.volatility * report_scale}});
  }
  j["overall"] = {{"R", overall.R},
                  {"R_p", overall.R_p},
                  {"R_v", overall.R_v},
                  {"R_scaled", overall.R * report_scale},
                  {"R_p_scaled", overall.R_p * report_scale},
                  {"R_v_scaled", overall.R_v * report_scale}};
  return j;
}

RiskReport RiskReport::from_json(const nlohmann::json& j) {
  try {
    RiskReport r;
    const auto& jm = j.at("meta");
    r.schema_hash = jm.at("schema_hash").get<std::string>();
    r.ctx_hash = jm.at("ctx_hash").get<std::string>();
    r.tensor_hash = jm.at("tensor_hash").get<std::string>();
    r.backend = jm.at("backend").get<std::string>();
    r.created = jm.at("created").get<std::string>();
    const auto& jc = j.at("config");
    r.norm_order = jc.at("k").get<std::string>();
    r.group_aggregation = jc.at("group_aggregation").get<std::string>();
    r.report_scale = jc.at("scale").get<double>();
    r.x_dist = jc.at("x_dist").get<std::string>();
    for (const auto& jg : j.at("per_group")) {
      RiskDecomposition risk;
      risk.discrimination = jg.at("r").get<double>();
      risk.prejudice = jg.at("r_p").get<double>();
      risk.volatility = jg.at("r_v").get<double>();
      r.overall.per_group[jg.at("group_id").get<std::string>()] = risk;
    }
    const auto& jo = j.at("overall");
    r.overall.R = jo.at("R").get<double>();
    r.overall.R_p = jo.at("R_p").get<double>();
    r.overall.R_v = jo.at("R_v").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("malformed report JSON: ") + e.what());
  }
}

void RiskReport::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

RiskReport RiskReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read report file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile("report file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace pvf
