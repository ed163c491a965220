// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "oracle.hpp"
#include "pvf/analysis.hpp"
#include "pvf/contexts.hpp"
#include "pvf/evaluate.hpp"
#include "pvf/hash.hpp"
#include "pvf/miner.hpp"
#include "pvf/mock_server.hpp"
#include "pvf/probe.hpp"
#include "pvf/reference_models.hpp"
#include "test_helpers.hpp"

using namespace pvf;

namespace {

const std::filesystem::path kFixtures = PVF_FIXTURE_DIR;
const std::string kCli = PVF_CLI_BIN;

struct Checker {
  std::ostringstream why;
  bool ok = true;

  void require(bool cond, const std::string& message) {
    if (!cond) {
      ok = false;
      why << "    " << message << "\n";
    }
  }
  void require_near(double actual, double expected, double tol,
                    const std::string& what) {
    if (!(std::abs(actual - expected) <= tol)) {
      std::ostringstream ss;
      ss.precision(17);
      ss << what << ": got " << actual << ", want " << expected
         << " (tol " << tol << ")";
      require(false, ss.str());
    }
  }
  void require_exact(double actual, double expected, const std::string& what) {
    if (actual != expected) {
      std::ostringstream ss;
      ss.precision(17);
      ss << what << ": got " << actual << ", want exactly " << expected;
      require(false, ss.str());
    }
  }
};

int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = kCli + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::uint64_t server_request_count(int port) {
  httplib::Client client("http://127.0.0.1:" + std::to_string(port));
  auto res = client.Get("/v1/stats");
  if (!res || res->status != 200) return static_cast<std::uint64_t>(-1);
  return nlohmann::json::parse(res->body).at("probe_requests")
      .get<std::uint64_t>();
}

// ---------------------------------------------------------------------------

void criterion_1_baseline_oracles(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  testutil::TempDir dir("pvf-acc1");
  const double scaled_tol = 1e-9 * 1000.0;

  auto run = [&](BaselineKind kind, std::size_t contexts, std::uint64_t seed) {
    BaselineSpec spec;
    spec.kind = kind;
    spec.num_groups = 20;
    spec.num_categories = 2;
    spec.num_contexts = contexts;
    spec.seed = seed;
    const auto path = dir.path() / (to_string(kind) + ".tensor.json");
    baseline_tensor(spec).save(path);
    const auto tensor = ProbabilityTensor::load(path);
    return evaluate(tensor, baseline_schema(spec),
                    WeightedContexts::uniform(contexts), EvalConfig{});
  };

  const auto unbiased = run(BaselineKind::IdeallyUnbiased, 100, 0);
  c.require_near(unbiased.overall.R * 1000.0, 0.0, scaled_tol, "unbiased R");
  c.require_near(unbiased.overall.R_p * 1000.0, 0.0, scaled_tol,
                 "unbiased R_p");
  c.require_near(unbiased.overall.R_v * 1000.0, 0.0, scaled_tol,
                 "unbiased R_v");

  const auto stereotyped = run(BaselineKind::Stereotyped, 100, 0);
  c.require_near(stereotyped.overall.R * 1000.0, 1000.0, scaled_tol,
                 "stereotyped R");
  c.require_near(stereotyped.overall.R_p * 1000.0, 1000.0, scaled_tol,
                 "stereotyped R_p");
  c.require_near(stereotyped.overall.R_v * 1000.0, 0.0, scaled_tol,
                 "stereotyped R_v");

  const auto random = run(BaselineKind::RandomlyStereotyped, 10000, 42);
  c.require_exact(random.overall.R * 1000.0, 1000.0, "random R scaled");
  c.require(random.overall.R_p * 1000.0 <= 30.0,
            "random R_p exceeds the 3/sqrt(|C|) bound");
  c.require(random.overall.R_p >= 0.0, "random R_p negative");

  const double dt = elapsed_s(t0);
  c.require(dt < 10.0, "runtime " + std::to_string(dt) + "s exceeds 10s");
}

void criterion_2_identity_and_jensen(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240);
  const std::size_t category_choices[] = {2, 3, 5};
  int instances = 0;
  while (instances < 1000) {
    const std::size_t num_categories = category_choices[instances % 3];
    const std::size_t num_contexts = 1 + instances % 50;
    std::vector<StereotypeVector> stereos;
    for (std::size_t k = 0; k < num_contexts; ++k) {
      stereos.push_back(
          stereotype(CategoryDistribution(
                         testutil::random_distribution(rng, num_categories)),
                     UnbiasedReference::uniform(num_categories)));
    }
    WeightedContexts weights(testutil::random_weights(rng, num_contexts));
    for (unsigned k : {0u, 1u, 2u, 3u}) {
      CriterionConfig cfg;
      cfg.norm_order = k == 0 ? NormOrder::infinity() : NormOrder::finite(k);
      const auto d = decompose(stereos, weights, cfg);
      c.require(std::abs(d.discrimination - (d.prejudice + d.volatility)) <=
                    1e-12,
                "identity violated at instance " + std::to_string(instances));
      c.require(d.volatility >= -1e-12,
                "negative volatility at instance " + std::to_string(instances));
    }
    ++instances;
  }
  const double dt = elapsed_s(t0);
  c.require(dt < 5.0, "runtime " + std::to_string(dt) + "s exceeds 5s");
}

void criterion_3_brute_force(Checker& c) {
  std::mt19937_64 rng(30303);
  for (int i = 0; i < 200; ++i) {
    const std::size_t num_categories = 2 + i % 2;  // |Y| <= 3
    const std::size_t num_contexts = 1 + i % 4;    // |C| <= 4
    std::vector<StereotypeVector> stereos;
    std::vector<std::vector<double>> raw;
    for (std::size_t k = 0; k < num_contexts; ++k) {
      auto s = stereotype(CategoryDistribution(testutil::random_distribution(
                              rng, num_categories)),
                          UnbiasedReference::uniform(num_categories));
      raw.push_back(s.values);
      stereos.push_back(std::move(s));
    }
    const auto weights = testutil::random_weights(rng, num_contexts);
    const auto mine = decompose(stereos, WeightedContexts(weights),
                                CriterionConfig{});
    const auto expected = oracle::decompose(raw, weights, 0);
    c.require(std::abs(mine.discrimination - expected.r) <= 1e-12 &&
                  std::abs(mine.prejudice - expected.r_p) <= 1e-12 &&
                  std::abs(mine.volatility - expected.r_v) <= 1e-12,
              "oracle mismatch at instance " + std::to_string(i));
  }
}

void criterion_4_direction_equivalence(Checker& c) {
  std::mt19937_64 rng(40404);
  const std::size_t category_choices[] = {2, 3, 5};
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = category_choices[i % 3];
    CategoryDistribution p(testutil::random_distribution(rng, n));
    const auto s = stereotype(p, UnbiasedReference::uniform(n));
    for (std::size_t g = 0; g < n; ++g) {
      const double lhs = direction_criterion(p, g);
      const double rhs =
          std::max(s.values[g], 0.0) / static_cast<double>(n - 1);
      c.require(std::abs(lhs - rhs) <= 1e-12,
                "direction mismatch at instance " + std::to_string(i));
    }
  }
}

void criterion_5_norm_monotonicity(Checker& c) {
  std::mt19937_64 rng(50505);
  for (int i = 0; i < 1000; ++i) {
    StereotypeVector s{testutil::random_stereotype(rng, 2 + i % 6)};
    double prev = std::numeric_limits<double>::infinity();
    for (unsigned k : {1u, 2u, 4u, 8u, 0u}) {
      CriterionConfig cfg;
      cfg.norm_order = k == 0 ? NormOrder::infinity() : NormOrder::finite(k);
      const double v = criterion(s, cfg);
      c.require(v <= prev + 1e-12,
                "norm not monotone at instance " + std::to_string(i));
      prev = v;
    }
  }
}

void criterion_6_miner_gate(Checker& c) {
  testutil::TempDir dir("pvf-acc6");
  const auto log = dir.path() / "log.txt";
  const auto corpus = kFixtures / "corpus_gender.jsonl";
  const auto schema = kFixtures / "schema_gender.json";

  // hash-stable across three runs
  std::vector<std::string> hashes;
  for (int run = 0; run < 3; ++run) {
    const auto out = dir.path() / ("contexts" + std::to_string(run) + ".json");
    const int rc = run_cli("mine --schema " + schema.string() + " --corpus " +
                               corpus.string() + " --out " + out.string(),
                           log);
    c.require(rc == 0, "mine run " + std::to_string(run) + " exited " +
                           std::to_string(rc));
    if (rc == 0) hashes.push_back(hash_file(out));
  }
  c.require(hashes.size() == 3 && hashes[0] == hashes[1] &&
                hashes[1] == hashes[2],
            "context set not hash-stable across runs");

  // shuffled (reversed) document order produces the identical file
  std::vector<std::string> lines;
  {
    std::ifstream in(corpus);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) lines.push_back(line);
    }
  }
  const auto reversed_path = dir.path() / "corpus_reversed.jsonl";
  {
    std::ofstream out(reversed_path);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      out << *it << "\n";
    }
  }
  const auto reversed_out = dir.path() / "contexts_reversed.json";
  const int rc = run_cli("mine --schema " + schema.string() + " --corpus " +
                             reversed_path.string() + " --out " +
                             reversed_out.string(),
                         log);
  c.require(rc == 0, "reversed mine exited " + std::to_string(rc));
  if (rc == 0 && !hashes.empty()) {
    c.require(hash_file(reversed_out) == hashes[0],
              "shuffled document order changed the context set");
  }

  // top template and quality gate
  const auto contexts = ContextSet::load(dir.path() / "contexts0.json");
  c.require(!contexts.empty() &&
                contexts.templates()[0].skeleton == "The [X] said that [Y]",
            "top template is not 'The [X] said that [Y]'");

  const auto word_schema = WordSchema::load(schema);
  std::ifstream labels(kFixtures / "corpus_gender_labels.jsonl");
  std::string line;
  std::size_t total = 0, agree = 0;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto sentence = j.at("sentence").get<std::string>();
    const bool label = j.at("accept").get<bool>();
    bool accepted = false;
    if (auto cand = match_candidate(sentence, word_schema)) {
      accepted = filter_candidate(*cand, word_schema, SlotOrder::XthenY)
                     .has_value();
    }
    ++total;
    if (accepted == label) ++agree;
  }
  c.require(total >= 200, "fixture has fewer than 200 labeled sentences");
  const double agreement =
      static_cast<double>(agree) / static_cast<double>(total);
  c.require(agreement >= 0.95,
            "label agreement " + std::to_string(agreement) + " below 0.95");
}

nlohmann::json normalized_report(const std::filesystem::path& path) {
  auto j = load_json(path);
  // provenance fields legitimately differ across backends and runs
  j["meta"].erase("created");
  j["meta"].erase("backend");
  j["meta"].erase("tensor_hash");
  return j;
}

void criterion_7_probe_round_trip(Checker& c) {
  testutil::TempDir dir("pvf-acc7");
  const auto log = dir.path() / "log.txt";
  const auto schema = kFixtures / "schema_e2e.json";
  const auto contexts = kFixtures / "contexts_e2e.json";

  MockInferenceServer server(
      MockServerConfig::load(kFixtures / "mock_tables.json"));
  const int port = server.start();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  const auto tensor1 = dir.path() / "tensor1.json";
  const auto tensor2 = dir.path() / "tensor2.json";
  const auto report1 = dir.path() / "report1.json";
  const auto report2 = dir.path() / "report2.json";

  int rc = run_cli("probe --schema " + schema.string() + " --contexts " +
                       contexts.string() + " --backend-url " + url +
                       " --out " + tensor1.string(),
                   log);
  c.require(rc == 0, "probe exited " + std::to_string(rc));
  const std::uint64_t after_first = server_request_count(port);

  // rerun over the complete output: zero new requests
  rc = run_cli("probe --schema " + schema.string() + " --contexts " +
                   contexts.string() + " --backend-url " + url + " --out " +
                   tensor1.string(),
               log);
  c.require(rc == 0, "probe rerun exited " + std::to_string(rc));
  const std::uint64_t after_second = server_request_count(port);
  c.require(after_first == after_second,
            "cached rerun issued " +
                std::to_string(after_second - after_first) + " requests");

  // replay through a file backend, audit both tensors
  rc = run_cli("probe --schema " + schema.string() + " --contexts " +
                   contexts.string() + " --backend-file " + tensor1.string() +
                   " --out " + tensor2.string(),
               log);
  c.require(rc == 0, "file-backend probe exited " + std::to_string(rc));

  rc = run_cli("audit --tensor " + tensor1.string() + " --schema " +
                   schema.string() + " --contexts " + contexts.string() +
                   " --out " + report1.string(),
               log);
  c.require(rc == 0, "audit 1 exited " + std::to_string(rc));
  rc = run_cli("audit --tensor " + tensor2.string() + " --schema " +
                   schema.string() + " --contexts " + contexts.string() +
                   " --out " + report2.string(),
               log);
  c.require(rc == 0, "audit 2 exited " + std::to_string(rc));

  if (std::filesystem::exists(report1) && std::filesystem::exists(report2)) {
    c.require(normalized_report(report1).dump() ==
                  normalized_report(report2).dump(),
              "file-backend replay changed the report");
  }
  server.stop();
}

void criterion_8_mock_end_to_end(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();
  testutil::TempDir dir("pvf-acc8");
  const auto log = dir.path() / "log.txt";
  const auto schema = kFixtures / "schema_e2e.json";
  const auto contexts = kFixtures / "contexts_e2e.json";

  MockInferenceServer server(
      MockServerConfig::load(kFixtures / "mock_tables.json"));
  const int port = server.start();

  const auto tensor = dir.path() / "tensor.json";
  const auto report_path = dir.path() / "report.json";
  int rc = run_cli("probe --schema " + schema.string() + " --contexts " +
                       contexts.string() + " --backend-url http://127.0.0.1:" +
                       std::to_string(port) + " --out " + tensor.string(),
                   log);
  c.require(rc == 0, "probe exited " + std::to_string(rc));
  rc = run_cli("audit --tensor " + tensor.string() + " --schema " +
                   schema.string() + " --contexts " + contexts.string() +
                   " --out " + report_path.string(),
               log);
  c.require(rc == 0, "audit exited " + std::to_string(rc));
  server.stop();

  if (std::filesystem::exists(report_path)) {
    const auto report = load_json(report_path);
    const auto expected = load_json(kFixtures / "e2e_expected_report.json");
    c.require_exact(report.at("overall").at("R").get<double>(),
                    expected.at("overall").at("R").get<double>(), "R");
    c.require_exact(report.at("overall").at("R_p").get<double>(),
                    expected.at("overall").at("R_p").get<double>(), "R_p");
    c.require_exact(report.at("overall").at("R_v").get<double>(),
                    expected.at("overall").at("R_v").get<double>(), "R_v");
    for (const auto& jg : report.at("per_group")) {
      const auto id = jg.at("group_id").get<std::string>();
      const auto& eg = expected.at("per_group").at(id);
      c.require_exact(jg.at("r").get<double>(), eg.at("r").get<double>(),
                      id + " r");
      c.require_exact(jg.at("r_p").get<double>(), eg.at("r_p").get<double>(),
                      id + " r_p");
      c.require_exact(jg.at("r_v").get<double>(), eg.at("r_v").get<double>(),
                      id + " r_v");
    }

    // independent cross-check: oracle decomposition from the mock tables
    // (he/him male, her/she female; logprob 0 -> weight 1, -1000 -> 0)
    const auto tables =
        load_json(kFixtures / "mock_tables.json").at("tables");
    const char* verbs[] = {"explained", "said", "stated", "wrote"};
    for (const char* group : {"doctor", "nurse"}) {
      std::vector<std::vector<double>> stereos;
      for (const char* verb : verbs) {
        const std::string prompt =
            std::string("The ") + group + " " + verb + " that [Y]";
        const auto& t = tables.at(prompt);
        const double male = std::exp(t.at("he").get<double>()) +
                            std::exp(t.at("him").get<double>());
        const double female = std::exp(t.at("her").get<double>()) +
                              std::exp(t.at("she").get<double>());
        const double total = male + female;
        stereos.push_back({(male / total) / 0.5 - 1.0,
                           (female / total) / 0.5 - 1.0});
      }
      const auto d = oracle::decompose(
          stereos, std::vector<double>(4, 0.25), 0);
      const auto report_json = load_json(report_path);
      for (const auto& jg : report_json.at("per_group")) {
        if (jg.at("group_id").get<std::string>() != group) continue;
        c.require_near(jg.at("r").get<double>(), d.r, 1e-12,
                       std::string(group) + " r vs oracle");
        c.require_near(jg.at("r_p").get<double>(), d.r_p, 1e-12,
                       std::string(group) + " r_p vs oracle");
      }
    }
  }

  const double dt = elapsed_s(t0);
  c.require(dt < 30.0, "runtime " + std::to_string(dt) + "s exceeds 30s");
}

void criterion_9_wls(Checker& c) {
  const auto exact = wls_fit({1, 2, 3}, {1, 2, 3}, {1, 1, 1});
  c.require_near(exact.slope, 1.0, 1e-12, "exact-line slope");
  c.require_near(exact.intercept, 0.0, 1e-12, "exact-line intercept");
  c.require_near(exact.r_squared, 1.0, 1e-9, "exact-line r2");

  const auto flat = wls_fit({1, 2, 3}, {4, 4, 4}, {1, 2, 3});
  c.require_near(flat.slope, 0.0, 1e-12, "constant-y slope");
  c.require_exact(flat.r_squared, 0.0, "constant-y r2");

  std::mt19937_64 rng(90909);
  std::uniform_real_distribution<double> x_dist(-10.0, 10.0);
  std::uniform_real_distribution<double> noise(-2.0, 2.0);
  std::uniform_real_distribution<double> w_dist(0.05, 20.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 3 + i % 25;
    std::vector<double> xs(n), ys(n), ws(n);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = x_dist(rng);
      ys[k] = -0.7 * xs[k] + 3.0 + noise(rng);
      ws[k] = w_dist(rng);
    }
    const auto fit = wls_fit(xs, ys, ws);
    const auto expected = oracle::wls_normal_equations(xs, ys, ws);
    c.require_near(fit.slope, expected.slope, 1e-9,
                   "slope at instance " + std::to_string(i));
    c.require_near(fit.intercept, expected.intercept, 1e-9,
                   "intercept at instance " + std::to_string(i));

    auto scaled = ws;
    for (auto& w : scaled) w *= 7.5;
    const auto rescaled = wls_fit(xs, ys, scaled);
    c.require_near(rescaled.slope, fit.slope, 1e-12,
                   "rescale slope at instance " + std::to_string(i));
    c.require_near(rescaled.r_squared, fit.r_squared, 1e-12,
                   "rescale r2 at instance " + std::to_string(i));
  }
}

void criterion_10_report_formatting(Checker& c) {
  std::vector<std::pair<std::string, OverallRisk>> reports;
  for (auto kind : {BaselineKind::IdeallyUnbiased, BaselineKind::Stereotyped,
                    BaselineKind::RandomlyStereotyped}) {
    BaselineSpec spec;
    spec.kind = kind;
    spec.num_groups = 20;
    spec.num_categories = 2;
    spec.num_contexts = 100;
    const auto e = expected_metrics(spec);
    OverallRisk risk;
    risk.R = e.R;
    risk.R_p = e.R_p;
    risk.R_v = e.R_v;
    reports.emplace_back(to_string(kind), risk);
  }
  const auto table = compare_models(reports);
  c.require(table.rows.size() == 3, "expected three rows");
  if (table.rows.size() == 3) {
    c.require(table.rows[0].model_id == "randomly-stereotyped" &&
                  table.rows[1].model_id == "stereotyped" &&
                  table.rows[2].model_id == "ideally-unbiased",
              "rows not sorted by R desc with lexicographic ties");
  }
  const auto csv = comparison_csv(table);
  c.require(csv.find("randomly-stereotyped,1000.00,0.00,1000.00") !=
                std::string::npos,
            "randomly-stereotyped row malformed: " + csv);
  c.require(csv.find("stereotyped,1000.00,1000.00,0.00") != std::string::npos,
            "stereotyped row malformed: " + csv);
  c.require(csv.find("ideally-unbiased,0.00,0.00,0.00") != std::string::npos,
            "ideally-unbiased row malformed: " + csv);
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    std::function<void(Checker&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"1. baseline oracle exactness (runtime < 10 s)",
       criterion_1_baseline_oracles},
      {"2. decomposition identity and Jensen gap, 1000 instances "
       "(runtime < 5 s)",
       criterion_2_identity_and_jensen},
      {"3. brute-force equivalence on 200 small instances",
       criterion_3_brute_force},
      {"4. direction-criterion equivalence, 1000 distributions",
       criterion_4_direction_equivalence},
      {"5. norm-family monotonicity over k in {1,2,4,8,inf}",
       criterion_5_norm_monotonicity},
      {"6. miner determinism and fixture quality gate", criterion_6_miner_gate},
      {"7. probe round-trip and cached rerun with zero requests",
       criterion_7_probe_round_trip},
      {"8. mock end-to-end report exactness (runtime < 30 s)",
       criterion_8_mock_end_to_end},
      {"9. weighted least squares correctness", criterion_9_wls},
      {"10. comparison table formatting for the baseline rows",
       criterion_10_report_formatting},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Checker checker;
    try {
      criterion.run(checker);
    } catch (const std::exception& e) {
      checker.require(false, std::string("exception: ") + e.what());
    }
    std::printf("[%s] %s\n", checker.ok ? "PASS" : "FAIL", criterion.label);
    if (!checker.ok) {
      std::fputs(checker.why.str().c_str(), stdout);
      ++failures;
    }
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
