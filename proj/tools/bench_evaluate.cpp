// SPDX-License-Identifier: Apache-2.0

// Compares the serial reference evaluator against the OpenMP kernel on a
// synthetic random-stereotype tensor and checks that both produce identical
// results.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "pvf/evaluate.hpp"
#include "pvf/reference_models.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool reports_identical(const pvf::RiskReport& a, const pvf::RiskReport& b) {
  if (a.overall.R != b.overall.R || a.overall.R_p != b.overall.R_p ||
      a.overall.R_v != b.overall.R_v) {
    return false;
  }
  for (const auto& [id, risk] : a.overall.per_group) {
    const auto& other = b.overall.per_group.at(id);
    if (risk.discrimination != other.discrimination ||
        risk.prejudice != other.prejudice ||
        risk.volatility != other.volatility) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark: serial reference vs OpenMP evaluator"};
  std::size_t num_contexts = 5000;
  std::size_t num_groups = 100;
  std::size_t num_categories = 5;
  std::uint64_t seed = 1;
  int reps = 5;
  app.add_option("--contexts", num_contexts, "number of contexts");
  app.add_option("--groups", num_groups, "number of groups");
  app.add_option("--categories", num_categories, "number of categories");
  app.add_option("--seed", seed, "tensor seed");
  app.add_option("--reps", reps, "repetitions (best time is reported)");
  CLI11_PARSE(app, argc, argv);

  pvf::BaselineSpec spec;
  spec.kind = pvf::BaselineKind::RandomlyStereotyped;
  spec.num_contexts = num_contexts;
  spec.num_groups = num_groups;
  spec.num_categories = num_categories;
  spec.seed = seed;

  const auto tensor = pvf::baseline_tensor(spec);
  const auto schema = pvf::baseline_schema(spec);
  const auto weights = pvf::WeightedContexts::uniform(num_contexts);
  const pvf::EvalConfig config;

  std::printf("cells=%zu (contexts=%zu groups=%zu categories=%zu)\n",
              num_contexts * num_groups, num_contexts, num_groups,
              num_categories);

  double best_ref = 1e100, best_par = 1e100;
  pvf::RiskReport ref_report, par_report;
  for (int i = 0; i < reps; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    ref_report = pvf::evaluate_reference(tensor, schema, weights, config);
    best_ref = std::min(best_ref, seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    par_report = pvf::evaluate(tensor, schema, weights, config);
    best_par = std::min(best_par, seconds_since(t0));
  }

#ifdef _OPENMP
  const int threads = omp_get_max_threads();
#else
  const int threads = 1;
#endif
  std::printf("reference : %8.4f s\n", best_ref);
  std::printf("openmp(%2d): %8.4f s   speedup %.2fx\n", threads, best_par,
              best_ref / best_par);
  const bool identical = reports_identical(ref_report, par_report);
  std::printf("results   : %s\n", identical ? "bit-identical" : "DIFFER");
  std::printf("R=%.6f R_p=%.6f R_v=%.6f\n", ref_report.overall.R,
              ref_report.overall.R_p, ref_report.overall.R_v);
  return identical ? 0 : 1;
}
