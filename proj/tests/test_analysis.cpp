// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "pvf/analysis.hpp"
#include "test_helpers.hpp"

using namespace pvf;

TEST_CASE("wls recovers an exact line") {
  const auto fit = wls_fit({1, 2, 3}, {1, 2, 3}, {1, 1, 1});
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.n == 3);
}

TEST_CASE("wls with constant y has zero slope and zero r2") {
  const auto fit = wls_fit({1, 2, 3}, {4, 4, 4}, {1, 2, 3});
  CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(fit.r_squared == 0.0);
}

TEST_CASE("wls error paths") {
  CHECK_THROWS_AS(wls_fit({1, 2}, {1, 2}, {1, 1}), LengthMismatch);
  CHECK_THROWS_AS(wls_fit({1, 2, 3}, {1, 2}, {1, 1, 1}), LengthMismatch);
  CHECK_THROWS_AS(wls_fit({2, 2, 2}, {1, 2, 3}, {1, 1, 1}), DegenerateDesign);
  CHECK_THROWS_AS(wls_fit({1, 2, 3}, {1, 2, 3}, {0, 0, 0}), LengthMismatch);
  CHECK_THROWS_AS(wls_fit({1, 2, 3}, {1, 2, 3}, {1, -1, 1}), LengthMismatch);
}

TEST_CASE("wls agrees with the raw normal-equation oracle") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> x_dist(-5.0, 5.0);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::uniform_real_distribution<double> w_dist(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + trial % 20;
    std::vector<double> xs(n), ys(n), ws(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = x_dist(rng);
      ys[i] = 2.5 * xs[i] - 1.0 + noise(rng);
      ws[i] = w_dist(rng);
    }
    if (*std::max_element(xs.begin(), xs.end()) -
            *std::min_element(xs.begin(), xs.end()) <
        1e-6) {
      continue;
    }
    const auto fit = wls_fit(xs, ys, ws);
    const auto expected = oracle::wls_normal_equations(xs, ys, ws);
    CHECK(fit.slope == doctest::Approx(expected.slope).epsilon(1e-9));
    CHECK(fit.intercept == doctest::Approx(expected.intercept).epsilon(1e-9));
    CHECK(fit.r_squared >= -1e-9);
    CHECK(fit.r_squared <= 1.0 + 1e-9);
  }
}

TEST_CASE("wls is invariant to rescaling the weights") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> uni(0.1, 4.0);
  std::vector<double> xs, ys, ws;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(uni(rng) * i);
    ys.push_back(uni(rng) + 0.5 * xs.back());
    ws.push_back(uni(rng));
  }
  const auto base = wls_fit(xs, ys, ws);
  for (double c : {1e-6, 0.5, 3.0, 1e6}) {
    auto scaled = ws;
    for (auto& w : scaled) w *= c;
    const auto fit = wls_fit(xs, ys, scaled);
    CHECK(fit.slope == doctest::Approx(base.slope).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(base.intercept).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(base.r_squared).epsilon(1e-12));
  }
}

TEST_CASE("wls with uniform weights equals ordinary least squares") {
  std::vector<double> xs = {0, 1, 2, 3, 4, 5};
  std::vector<double> ys = {1.1, 0.8, 2.3, 2.9, 4.4, 4.6};
  const auto weighted = wls_fit(xs, ys, std::vector<double>(xs.size(), 1.0));

  // unweighted closed form
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = sy / n - slope * sx / n;
  CHECK(weighted.slope == doctest::Approx(slope).epsilon(1e-12));
  CHECK(weighted.intercept == doctest::Approx(intercept).epsilon(1e-12));
}

TEST_CASE("distribution summary statistics") {
  // two-point symmetric distribution: mean 0, excess kurtosis -2
  std::vector<double> pm;
  for (int i = 0; i < 50; ++i) {
    pm.push_back(-1.0);
    pm.push_back(1.0);
  }
  const auto summary = summarize_distribution(pm);
  CHECK(summary.mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(summary.excess_kurtosis == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(!summary.degenerate);

  std::uint64_t total = 0;
  for (auto c : summary.histogram) total += c;
  CHECK(total == pm.size());
}

TEST_CASE("distribution summary of a seeded normal sample") {
  // Box-Muller over a fixed mt19937_64 stream keeps this portable.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> sample;
  sample.reserve(100000);
  for (int i = 0; i < 50000; ++i) {
    const double u1 = 1.0 - uni(rng);
    const double u2 = uni(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    sample.push_back(radius * std::cos(2.0 * M_PI * u2));
    sample.push_back(radius * std::sin(2.0 * M_PI * u2));
  }
  const auto summary = summarize_distribution(sample);
  CHECK(std::abs(summary.mean) < 0.02);
  CHECK(summary.std_dev == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(summary.excess_kurtosis) < 0.1);
}

TEST_CASE("distribution summary degenerate and error cases") {
  const auto flat = summarize_distribution({2.0, 2.0, 2.0});
  CHECK(flat.std_dev == 0.0);
  CHECK(flat.excess_kurtosis == 0.0);
  CHECK(flat.degenerate);
  CHECK(flat.histogram[0] == 3);

  CHECK_THROWS_AS(summarize_distribution({1.0}), TooFewSamples);
}

TEST_CASE("distribution summary is permutation invariant") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> uni(-3.0, 7.0);
  std::vector<double> values(200);
  for (auto& v : values) v = uni(rng);
  auto shuffled = values;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = summarize_distribution(values);
  const auto b = summarize_distribution(shuffled);
  CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
  CHECK(a.std_dev == doctest::Approx(b.std_dev).epsilon(1e-12));
  CHECK(a.excess_kurtosis ==
        doctest::Approx(b.excess_kurtosis).epsilon(1e-12));
  CHECK(a.histogram == b.histogram);
}

TEST_CASE("compare_models ranks by scaled R with lexicographic ties") {
  OverallRisk unbiased{0.0, 0.0, 0.0, {}};
  OverallRisk stereotyped{1.0, 1.0, 0.0, {}};
  OverallRisk random_stereotyped{1.0, 0.0, 1.0, {}};
  const auto table = compare_models({{"stereotyped", stereotyped},
                                     {"ideally-unbiased", unbiased},
                                     {"randomly-stereotyped", random_stereotyped}});
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].model_id == "randomly-stereotyped");
  CHECK(table.rows[1].model_id == "stereotyped");
  CHECK(table.rows[2].model_id == "ideally-unbiased");
  CHECK(table.rows[0].r_scaled == doctest::Approx(1000.0));
  CHECK(table.rows[2].r_scaled == doctest::Approx(0.0));

  const auto csv = comparison_csv(table);
  CHECK(csv.find("randomly-stereotyped,1000.00,0.00,1000.00\n") !=
        std::string::npos);
  CHECK(csv.find("stereotyped,1000.00,1000.00,0.00\n") != std::string::npos);
  CHECK(csv.find("ideally-unbiased,0.00,0.00,0.00\n") != std::string::npos);
}

TEST_CASE("compare_models single row and rendering markers") {
  OverallRisk risk{0.87032, 0.86914, 0.00118, {}};
  const auto table = compare_models({{"t5", risk}});
  REQUIRE(table.rows.size() == 1);
  const auto rendered = render_comparison(table);
  CHECK(rendered.find("870.32") != std::string::npos);
  CHECK(rendered.find("869.14") != std::string::npos);
  CHECK(rendered.find("1.18") != std::string::npos);
}

TEST_CASE("social factor CSV parsing") {
  testutil::TempDir dir("pvf-factors");
  const auto path = dir.path() / "factors.csv";
  testutil::write_file(path,
                       "group_id,factor_value,weight\n"
                       "doctor,120000,800\n"
                       "nurse,75000,3000\n");
  const auto rows = load_social_factors(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].group_id == "doctor");
  CHECK(rows[0].factor_value == 120000.0);
  CHECK(rows[1].weight == 3000.0);

  testutil::write_file(path, "wrong,header\n");
  CHECK_THROWS_AS(load_social_factors(path), LengthMismatch);
}
