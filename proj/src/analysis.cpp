// SPDX-License-Identifier: Apache-2.0
#include "pvf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pvf {

std::vector<SocialFactorRow> load_social_factors(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read factors file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw LengthMismatch("factors file is empty: " + path.string());
  }
  // tolerate a UTF-8 BOM and trailing \r
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  strip_cr(line);
  if (line != "group_id,factor_value,weight") {
    throw LengthMismatch("factors file must start with header "
                         "'group_id,factor_value,weight'");
  }
  std::vector<SocialFactorRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    SocialFactorRow row;
    std::string factor, weight;
    if (!std::getline(ss, row.group_id, ',') ||
        !std::getline(ss, factor, ',') || !std::getline(ss, weight)) {
      throw LengthMismatch("bad factors row at line " +
                           std::to_string(lineno));
    }
    try {
      row.factor_value = std::stod(factor);
      row.weight = std::stod(weight);
    } catch (const std::exception&) {
      throw LengthMismatch("bad number in factors row at line " +
                           std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RegressionResult wls_fit(const std::vector<double>& xs,
                         const std::vector<double>& ys,
                         const std::vector<double>& weights) {
  if (xs.size() != ys.size() || xs.size() != weights.size()) {
    throw LengthMismatch("wls_fit inputs have unequal lengths");
  }
  if (xs.size() < 3) {
    throw LengthMismatch("wls_fit needs at least 3 points");
  }
  double w_sum = 0.0;
  int n = 0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw LengthMismatch("wls_fit weights must be nonnegative");
    }
    if (w > 0.0) ++n;
    w_sum += w;
  }
  if (w_sum <= 0.0) {
    throw LengthMismatch("wls_fit weights are all zero");
  }

  double x_bar = 0.0, y_bar = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x_bar += weights[i] * xs[i];
    y_bar += weights[i] * ys[i];
  }
  x_bar /= w_sum;
  y_bar /= w_sum;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - x_bar;
    const double dy = ys[i] - y_bar;
    sxx += weights[i] * dx * dx;
    sxy += weights[i] * dx * dy;
    syy += weights[i] * dy * dy;
  }
  if (sxx <= 0.0) {
    throw DegenerateDesign("x values are constant; slope is undefined");
  }

  RegressionResult res;
  res.slope = sxy / sxx;
  res.intercept = y_bar - res.slope * x_bar;
  res.n = n;
  if (syy <= 0.0) {
    res.r_squared = 0.0;  // constant y: nothing to explain
    return res;
  }
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - res.intercept - res.slope * xs[i];
    ss_res += weights[i] * e * e;
  }
  res.r_squared = 1.0 - ss_res / syy;
  return res;
}

DistributionSummary summarize_distribution(const std::vector<double>& values,
                                           std::size_t num_bins) {
  if (values.size() < 2) {
    throw TooFewSamples("distribution summary needs at least 2 values");
  }
  if (num_bins == 0) {
    throw TooFewSamples("histogram needs at least 1 bin");
  }
  const double n = static_cast<double>(values.size());
  DistributionSummary out;
  out.min = values.front();
  out.max = values.front();
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  out.mean = sum / n;

  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - out.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  out.std_dev = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m4 /= n;
  if (m2 <= 0.0) {
    out.degenerate = true;
    out.excess_kurtosis = 0.0;
  } else {
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }

  out.histogram.assign(num_bins, 0);
  const double width = (out.max - out.min) / static_cast<double>(num_bins);
  for (double v : values) {
    std::size_t bin = 0;
    if (width > 0.0) {
      bin = std::min(static_cast<std::size_t>((v - out.min) / width),
                     num_bins - 1);
    }
    ++out.histogram[bin];
  }
  return out;
}

ComparisonTable compare_models(
    const std::vector<std::pair<std::string, OverallRisk>>& reports,
    double scale) {
  if (reports.empty()) {
    throw LengthMismatch("compare_models needs at least one report");
  }
  ComparisonTable table;
  for (const auto& [id, risk] : reports) {
    table.rows.push_back(
        {id, risk.R * scale, risk.R_p * scale, risk.R_v * scale});
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) {
              if (a.r_scaled != b.r_scaled) return a.r_scaled > b.r_scaled;
              return a.model_id < b.model_id;
            });

  auto extremes = [&](auto get, std::string& worst, std::string& best) {
    const ComparisonRow* lo = &table.rows.front();
    const ComparisonRow* hi = &table.rows.front();
    for (const auto& row : table.rows) {
      if (get(row) > get(*hi)) hi = &row;
      if (get(row) < get(*lo)) lo = &row;
    }
    worst = hi->model_id;
    best = lo->model_id;
  };
  extremes([](const ComparisonRow& r) { return r.r_scaled; }, table.worst_r,
           table.best_r);
  extremes([](const ComparisonRow& r) { return r.r_p_scaled; },
           table.worst_r_p, table.best_r_p);
  extremes([](const ComparisonRow& r) { return r.r_v_scaled; },
           table.worst_r_v, table.best_r_v);
  return table;
}

namespace {

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string mark(const std::string& value, bool worst, bool best) {
  if (worst) return "**" + value + "**";
  if (best) return "__" + value + "__";
  return value;
}

}  // namespace

std::string render_comparison(const ComparisonTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"model", "R", "R^p", "R^v"});
  for (const auto& row : table.rows) {
    cells.push_back(
        {row.model_id,
         mark(fmt2(row.r_scaled), row.model_id == table.worst_r,
              row.model_id == table.best_r),
         mark(fmt2(row.r_p_scaled), row.model_id == table.worst_r_p,
              row.model_id == table.best_r_p),
         mark(fmt2(row.r_v_scaled), row.model_id == table.worst_r_v,
              row.model_id == table.best_r_v)});
  }
  std::vector<std::size_t> width(4, 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < 4; ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < 4; ++i) {
      out << (i == 0 ? "" : "  ");
      out << row[i] << std::string(width[i] - row[i].size(), ' ');
    }
    out << "\n";
  }
  return out.str();
}

std::string comparison_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "model_id,R,R_p,R_v\n";
  for (const auto& row : table.rows) {
    out << row.model_id << "," << fmt2(row.r_scaled) << ","
        << fmt2(row.r_p_scaled) << "," << fmt2(row.r_v_scaled) << "\n";
  }
  return out.str();
}

}  // namespace pvf
