// SPDX-License-Identifier: Apache-2.0

// pvf: mine -> probe -> audit -> compare/regress pipeline with file
// handoffs. Every output embeds the input hashes so runs can be audited and
// reproduced. Exit codes: 0 ok, 2 config error, 3 backend error, 4 data
// validation error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pvf/analysis.hpp"
#include "pvf/contexts.hpp"
#include "pvf/evaluate.hpp"
#include "pvf/hash.hpp"
#include "pvf/miner.hpp"
#include "pvf/probe.hpp"
#include "pvf/reference_models.hpp"
#include "pvf/schema.hpp"
#include "pvf/tensor.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw pvf::ConfigError("cannot write " + path.string());
  }
  out << text;
}

void require_exists(const fs::path& path, const char* what) {
  if (!fs::exists(path)) {
    throw pvf::ConfigError(std::string(what) + " not found: " + path.string());
  }
}

// --- mine ------------------------------------------------------------------

struct MineArgs {
  std::string schema_path;
  std::string corpus_path;
  std::string out = "contexts.json";
  std::string mode = "x-then-y";
  std::size_t sample = 10000;
  std::uint64_t seed = 0;
};

int cmd_mine(const MineArgs& args) {
  require_exists(args.schema_path, "schema");
  require_exists(args.corpus_path, "corpus");
  const auto schema = pvf::WordSchema::load(args.schema_path);
  const auto mode = pvf::parse_slot_order(args.mode);

  auto docs = pvf::load_corpus_jsonl(args.corpus_path);
  docs = pvf::sample_documents(std::move(docs), args.sample, args.seed);

  pvf::MiningStats stats;
  const auto contexts = pvf::mine_corpus(docs, schema, mode, &stats);
  if (contexts.empty()) {
    throw pvf::BadTemplate("empty context set: no sentence survived mining");
  }
  contexts.save(args.out);

  nlohmann::json jstats = {{"documents", stats.documents},
                           {"sentences", stats.sentences},
                           {"candidates", stats.candidates},
                           {"rejected_exclusion", stats.rejected_exclusion},
                           {"rejected_ambiguous_x", stats.rejected_ambiguous_x},
                           {"rejected_no_linked_y", stats.rejected_no_linked_y},
                           {"accepted", stats.accepted},
                           {"unique_skeletons", contexts.size()},
                           {"schema_hash", pvf::hash_file(args.schema_path)},
                           {"corpus_hash", pvf::hash_file(args.corpus_path)}};
  write_text(args.out + ".stats.json", jstats.dump(2) + "\n");

  std::printf("mined %llu sentences -> %zu templates (%llu accepted)\n",
              static_cast<unsigned long long>(stats.sentences),
              contexts.size(),
              static_cast<unsigned long long>(stats.accepted));
  std::printf("wrote %s (hash %s)\n", args.out.c_str(),
              pvf::hash_file(args.out).c_str());
  return 0;
}

// --- probe -----------------------------------------------------------------

struct ProbeArgs {
  std::string schema_path;
  std::string contexts_path;
  std::string backend_url;
  std::string backend_file;
  std::string backend_kind = "probe";  // probe | openai
  std::string model = "default";
  std::string slot = "terminal";
  std::string out = "tensor.json";
  int concurrency = 8;
  int timeout_ms = 30000;
};

int cmd_probe(const ProbeArgs& args) {
  require_exists(args.schema_path, "schema");
  require_exists(args.contexts_path, "contexts");
  if (args.backend_url.empty() == args.backend_file.empty()) {
    throw pvf::ConfigError(
        "exactly one of --backend-url / --backend-file is required");
  }
  const auto schema = pvf::WordSchema::load(args.schema_path);
  const auto contexts = pvf::ContextSet::load(args.contexts_path);

  std::unique_ptr<pvf::Backend> backend;
  if (!args.backend_file.empty()) {
    require_exists(args.backend_file, "backend tensor");
    backend = std::make_unique<pvf::FileBackend>(args.backend_file);
  } else {
    pvf::HttpOptions options;
    options.timeout_ms = args.timeout_ms;
    if (const char* token = std::getenv("PVF_BACKEND_TOKEN")) {
      options.auth_token = token;
    }
    if (args.backend_kind == "openai") {
      backend = std::make_unique<pvf::OpenAiBackend>(args.backend_url,
                                                     args.model, options);
    } else if (args.backend_kind == "probe") {
      backend = std::make_unique<pvf::HttpBackend>(args.backend_url, options);
    } else {
      throw pvf::ConfigError("unknown backend kind: " + args.backend_kind);
    }
  }

  pvf::CollectOptions options;
  options.output_file = args.out;
  options.slot = pvf::parse_slot_mode(args.slot);
  options.concurrency = args.concurrency;
  options.schema_hash = pvf::hash_file(args.schema_path);
  options.ctx_hash = pvf::hash_file(args.contexts_path);

  pvf::CollectStats stats;
  const auto tensor = pvf::collect(*backend, contexts, schema, options, &stats);
  std::printf("tensor %zu x %zu cells: %llu queried, %llu cached, "
              "%llu warnings\n",
              tensor.num_contexts(), tensor.num_groups(),
              static_cast<unsigned long long>(stats.queried),
              static_cast<unsigned long long>(stats.cached),
              static_cast<unsigned long long>(stats.warnings));
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

// --- audit -----------------------------------------------------------------

struct AuditArgs {
  std::string tensor_path;
  std::string schema_path;
  std::string contexts_path;  // optional: uniform weights when absent
  std::string k = "inf";
  std::string x_dist = "uniform";
  std::string aggregation = "mean";
  double scale = 1000.0;
  std::string out = "report.json";
  bool serial = false;
};

int cmd_audit(const AuditArgs& args) {
  require_exists(args.tensor_path, "tensor");
  require_exists(args.schema_path, "schema");
  const auto schema = pvf::WordSchema::load(args.schema_path);
  auto tensor = pvf::ProbabilityTensor::load(args.tensor_path);

  const std::string schema_hash = pvf::hash_file(args.schema_path);
  if (!tensor.meta().schema_hash.empty() &&
      tensor.meta().schema_hash != schema_hash) {
    throw pvf::ProvenanceMismatch(
        "tensor was collected against a different schema (hash " +
        tensor.meta().schema_hash + ", file " + schema_hash + ")");
  }

  if (args.contexts_path.empty() && !tensor.meta().ctx_hash.empty()) {
    throw pvf::ConfigError(
        "tensor was collected against a context set (ctx_hash " +
        tensor.meta().ctx_hash + "); pass --contexts for correct weights");
  }
  pvf::WeightedContexts weights = pvf::WeightedContexts::uniform(
      std::max<std::size_t>(tensor.num_contexts(), 1));
  if (!args.contexts_path.empty()) {
    require_exists(args.contexts_path, "contexts");
    const std::string ctx_hash = pvf::hash_file(args.contexts_path);
    if (!tensor.meta().ctx_hash.empty() &&
        tensor.meta().ctx_hash != ctx_hash) {
      throw pvf::ProvenanceMismatch(
          "tensor was collected against a different context set (hash " +
          tensor.meta().ctx_hash + ", file " + ctx_hash + ")");
    }
    const auto contexts = pvf::ContextSet::load(args.contexts_path);
    if (contexts.size() != tensor.num_contexts()) {
      throw pvf::WeightMismatch(
          "contexts file has " + std::to_string(contexts.size()) +
          " templates, tensor has " + std::to_string(tensor.num_contexts()));
    }
    weights = contexts.weights();
  }

  tensor.validate_complete(schema.candidate_words());

  pvf::EvalConfig config;
  config.criterion.norm_order = pvf::NormOrder::parse(args.k);
  if (!(args.scale > 0.0)) {
    throw pvf::ConfigError("--scale must be positive");
  }
  config.criterion.report_scale = args.scale;
  if (args.aggregation == "max") {
    config.criterion.group_aggregation = pvf::GroupAggregation::Max;
  } else if (args.aggregation != "mean") {
    throw pvf::ConfigError("unknown aggregation: " + args.aggregation);
  }
  config.x_dist = pvf::parse_x_distribution(args.x_dist);

  auto report = args.serial
                    ? pvf::evaluate_reference(tensor, schema, weights, config)
                    : pvf::evaluate(tensor, schema, weights, config);
  report.tensor_hash = pvf::hash_file(args.tensor_path);
  report.schema_hash = schema_hash;
  report.save(args.out);

  // distribution summaries of the per-group risks (plot data as CSV)
  if (report.overall.per_group.size() >= 2) {
    std::vector<double> prejudice, volatility;
    for (const auto& [id, risk] : report.overall.per_group) {
      prejudice.push_back(risk.prejudice);
      volatility.push_back(risk.volatility);
    }
    std::ostringstream csv;
    csv << "metric,bin,lo,hi,count\n";
    auto emit = [&](const char* name, const std::vector<double>& values) {
      const auto summary = pvf::summarize_distribution(values);
      const double width = (summary.max - summary.min) /
                           static_cast<double>(summary.histogram.size());
      for (std::size_t b = 0; b < summary.histogram.size(); ++b) {
        csv << name << "," << b << "," << summary.min + width * b << ","
            << summary.min + width * (b + 1) << "," << summary.histogram[b]
            << "\n";
      }
    };
    emit("prejudice", prejudice);
    emit("volatility", volatility);
    write_text(args.out + ".distributions.csv", csv.str());
  }

  std::printf("R=%.6f R_p=%.6f R_v=%.6f (x%g: %.2f / %.2f / %.2f)\n",
              report.overall.R, report.overall.R_p, report.overall.R_v,
              args.scale, report.overall.R * args.scale,
              report.overall.R_p * args.scale,
              report.overall.R_v * args.scale);
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> reports;
  std::string out;
};

int cmd_compare(const CompareArgs& args) {
  std::vector<std::pair<std::string, pvf::OverallRisk>> rows;
  for (const auto& path : args.reports) {
    require_exists(path, "report");
    const auto report = pvf::RiskReport::load(path);
    rows.emplace_back(fs::path(path).stem().string(), report.overall);
  }
  const auto table = pvf::compare_models(rows);
  std::fputs(pvf::render_comparison(table).c_str(), stdout);
  if (!args.out.empty()) {
    write_text(args.out, pvf::comparison_csv(table));
    std::printf("wrote %s\n", args.out.c_str());
  }
  return 0;
}

// --- regress ---------------------------------------------------------------

struct RegressArgs {
  std::string report_path;
  std::string factors_path;
  std::string out = "regression.json";
};

int cmd_regress(const RegressArgs& args) {
  require_exists(args.report_path, "report");
  require_exists(args.factors_path, "factors");
  const auto report = pvf::RiskReport::load(args.report_path);
  const auto factors = pvf::load_social_factors(args.factors_path);

  std::vector<std::string> missing;
  std::vector<double> xs, ys, ws;
  std::ostringstream points;
  points << "group_id,factor_value,risk,weight\n";
  for (const auto& row : factors) {
    auto it = report.overall.per_group.find(row.group_id);
    if (it == report.overall.per_group.end()) {
      missing.push_back(row.group_id);
      continue;
    }
    xs.push_back(row.factor_value);
    ys.push_back(it->second.discrimination);
    ws.push_back(row.weight);
    points << row.group_id << "," << row.factor_value << ","
           << it->second.discrimination << "," << row.weight << "\n";
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) {
      names += (names.empty() ? "" : ", ") + m;
    }
    throw pvf::MissingGroups("factor groups not in report: " + names);
  }

  const auto fit = pvf::wls_fit(xs, ys, ws);
  nlohmann::json j = {{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"r_squared", fit.r_squared},
                      {"n", fit.n},
                      {"report", args.report_path},
                      {"factors_hash", pvf::hash_file(args.factors_path)}};
  write_text(args.out, j.dump(2) + "\n");
  write_text(args.out + ".points.csv", points.str());
  std::printf("slope=%.6g intercept=%.6g r2=%.4f n=%d\n", fit.slope,
              fit.intercept, fit.r_squared, fit.n);
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

// --- baselines -------------------------------------------------------------

struct BaselineArgs {
  std::string kind = "ideally-unbiased";
  std::size_t groups = 20;
  std::size_t categories = 2;
  std::size_t contexts = 100;
  std::uint64_t seed = 0;
  std::string out_prefix = "baseline";
};

int cmd_baselines(const BaselineArgs& args) {
  pvf::BaselineSpec spec;
  spec.kind = pvf::parse_baseline_kind(args.kind);
  spec.num_groups = args.groups;
  spec.num_categories = args.categories;
  spec.num_contexts = args.contexts;
  spec.seed = args.seed;
  pvf::validate(spec);

  const auto schema_path = args.out_prefix + ".schema.json";
  const auto tensor_path = args.out_prefix + ".tensor.json";
  const auto expected_path = args.out_prefix + ".expected.json";

  pvf::baseline_schema(spec).save(schema_path);
  auto tensor = pvf::baseline_tensor(spec);
  tensor.meta().schema_hash = pvf::hash_file(schema_path);
  tensor.save(tensor_path);

  const auto expected = pvf::expected_metrics(spec);
  nlohmann::json j = {{"kind", pvf::to_string(spec.kind)},
                      {"R", expected.R},
                      {"R_p", expected.R_p},
                      {"R_v", expected.R_v},
                      {"note", "raw scale; exact in the infinite-context "
                               "limit for k=inf, uniform reference and "
                               "uniform group weights"}};
  write_text(expected_path, j.dump(2) + "\n");

  std::printf("wrote %s, %s, %s\n", schema_path.c_str(), tensor_path.c_str(),
              expected_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prejudice-volatility audit pipeline"};
  app.require_subcommand(1);

  MineArgs mine_args;
  auto* mine = app.add_subcommand("mine", "mine context templates from a corpus");
  mine->add_option("--schema", mine_args.schema_path, "word schema JSON")
      ->required();
  mine->add_option("--corpus", mine_args.corpus_path, "JSON-lines corpus")
      ->required();
  mine->add_option("--out", mine_args.out, "output contexts file");
  mine->add_option("--mode", mine_args.mode, "x-then-y | y-at-end");
  mine->add_option("--sample", mine_args.sample, "max documents to sample");
  mine->add_option("--seed", mine_args.seed, "sampling seed");

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "collect token probabilities");
  probe->add_option("--schema", probe_args.schema_path, "word schema JSON")
      ->required();
  probe->add_option("--contexts", probe_args.contexts_path, "contexts JSON")
      ->required();
  probe->add_option("--backend-url", probe_args.backend_url,
                    "inference server base url");
  probe->add_option("--backend-file", probe_args.backend_file,
                    "tensor file to replay as a backend");
  probe->add_option("--backend-kind", probe_args.backend_kind,
                    "probe | openai");
  probe->add_option("--model", probe_args.model,
                    "model name (openai backend)");
  probe->add_option("--slot", probe_args.slot, "terminal | masked");
  probe->add_option("--out", probe_args.out, "output tensor file");
  probe->add_option("--concurrency", probe_args.concurrency,
                    "max in-flight requests");
  probe->add_option("--timeout-ms", probe_args.timeout_ms, "request timeout");

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "compute the risk report");
  audit->add_option("--tensor", audit_args.tensor_path, "probability tensor")
      ->required();
  audit->add_option("--schema", audit_args.schema_path, "word schema JSON")
      ->required();
  audit->add_option("--contexts", audit_args.contexts_path,
                    "contexts JSON (uniform context weights when omitted)");
  audit->add_option("--k", audit_args.k, "criterion norm order (1,2,...,inf)");
  audit->add_option("--x-dist", audit_args.x_dist, "uniform | weighted");
  audit->add_option("--aggregation", audit_args.aggregation, "mean | max");
  audit->add_option("--scale", audit_args.scale, "report scale");
  audit->add_option("--out", audit_args.out, "output report file");
  audit->add_flag("--serial", audit_args.serial,
                  "use the serial reference evaluator");

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "rank reports by risk");
  compare->add_option("reports", compare_args.reports, "report files")
      ->required();
  compare->add_option("--out", compare_args.out, "CSV output path");

  RegressArgs regress_args;
  auto* regress =
      app.add_subcommand("regress", "regress per-group risk on a factor");
  regress->add_option("--report", regress_args.report_path, "report JSON")
      ->required();
  regress->add_option("--factors", regress_args.factors_path,
                      "CSV group_id,factor_value,weight")
      ->required();
  regress->add_option("--out", regress_args.out, "output JSON path");

  BaselineArgs baseline_args;
  auto* baselines =
      app.add_subcommand("baselines", "emit analytic baseline tensors");
  baselines->add_option("--kind", baseline_args.kind,
                        "ideally-unbiased | stereotyped | randomly-stereotyped");
  baselines->add_option("--groups", baseline_args.groups, "group count");
  baselines->add_option("--categories", baseline_args.categories,
                        "category count");
  baselines->add_option("--contexts", baseline_args.contexts, "context count");
  baselines->add_option("--seed", baseline_args.seed, "generator seed");
  baselines->add_option("--out", baseline_args.out_prefix,
                        "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mine) return cmd_mine(mine_args);
    if (*probe) return cmd_probe(probe_args);
    if (*audit) return cmd_audit(audit_args);
    if (*compare) return cmd_compare(compare_args);
    if (*regress) return cmd_regress(regress_args);
    if (*baselines) return cmd_baselines(baseline_args);
  } catch (const pvf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
