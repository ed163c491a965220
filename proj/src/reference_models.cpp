// SPDX-License-Identifier: Apache-2.0
#include "pvf/reference_models.hpp"

namespace pvf {

BaselineKind parse_baseline_kind(const std::string& text) {
  if (text == "ideally-unbiased") return BaselineKind::IdeallyUnbiased;
  if (text == "stereotyped") return BaselineKind::Stereotyped;
  if (text == "randomly-stereotyped") return BaselineKind::RandomlyStereotyped;
  throw InvalidSpec("unknown baseline kind: " + text);
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::IdeallyUnbiased:
      return "ideally-unbiased";
    case BaselineKind::Stereotyped:
      return "stereotyped";
    case BaselineKind::RandomlyStereotyped:
      return "randomly-stereotyped";
  }
  throw InvalidSpec("unknown baseline kind");
}

void validate(const BaselineSpec& spec) {
  if (spec.num_groups == 0) {
    throw InvalidSpec("baseline needs >= 1 group");
  }
  if (spec.num_categories < 2) {
    throw InvalidSpec("baseline needs >= 2 categories");
  }
  if (spec.num_contexts == 0) {
    throw InvalidSpec("baseline needs >= 1 context");
  }
  if (spec.stereotype_assignment) {
    if (spec.kind != BaselineKind::Stereotyped) {
      throw InvalidSpec("stereotype assignment is only valid for the "
                        "stereotyped baseline");
    }
    for (const auto& [group, category] : *spec.stereotype_assignment) {
      if (group >= spec.num_groups || category >= spec.num_categories) {
        throw InvalidSpec("stereotype assignment out of range: group " +
                          std::to_string(group) + " -> category " +
                          std::to_string(category));
      }
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-cell stream derived from (seed, context, group); independent of
// evaluation order.
std::size_t random_category(std::uint64_t seed, std::size_t context,
                            std::size_t group, std::size_t num_categories) {
  std::uint64_t h = splitmix64(seed ^ 0xA24BAED4963EE407ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(context));
  h = splitmix64(h ^ static_cast<std::uint64_t>(group));
  return static_cast<std::size_t>(h % num_categories);
}

std::size_t assigned_category(const BaselineSpec& spec, std::size_t group) {
  if (spec.stereotype_assignment) {
    auto it = spec.stereotype_assignment->find(group);
    if (it != spec.stereotype_assignment->end()) {
      return it->second;
    }
  }
  return group % spec.num_categories;
}

CategoryDistribution point_mass(std::size_t category,
                                std::size_t num_categories) {
  std::vector<double> p(num_categories, 0.0);
  p[category] = 1.0;
  return CategoryDistribution(std::move(p));
}

}  // namespace

std::vector<CategoryDistribution> generate(const BaselineSpec& spec) {
  validate(spec);
  std::vector<CategoryDistribution> cells;
  cells.reserve(spec.num_contexts * spec.num_groups);
  const CategoryDistribution uniform(
      std::vector<double>(spec.num_categories,
                          1.0 / static_cast<double>(spec.num_categories)));
  for (std::size_t c = 0; c < spec.num_contexts; ++c) {
    for (std::size_t g = 0; g < spec.num_groups; ++g) {
      switch (spec.kind) {
        case BaselineKind::IdeallyUnbiased:
          cells.push_back(uniform);
          break;
        case BaselineKind::Stereotyped:
          cells.push_back(
              point_mass(assigned_category(spec, g), spec.num_categories));
          break;
        case BaselineKind::RandomlyStereotyped:
          cells.push_back(point_mass(
              random_category(spec.seed, c, g, spec.num_categories),
              spec.num_categories));
          break;
      }
    }
  }
  return cells;
}

ProbabilityTensor baseline_tensor(const BaselineSpec& spec) {
  auto cells = generate(spec);
  std::vector<std::string> context_ids(spec.num_contexts);
  for (std::size_t c = 0; c < spec.num_contexts; ++c) {
    context_ids[c] = "c" + std::to_string(c);
  }
  std::vector<std::string> group_ids(spec.num_groups);
  for (std::size_t g = 0; g < spec.num_groups; ++g) {
    group_ids[g] = "g" + std::to_string(g);
  }
  TensorMeta meta;
  meta.backend = "baseline:" + to_string(spec.kind) +
                 (spec.kind == BaselineKind::RandomlyStereotyped
                      ? " seed=" + std::to_string(spec.seed)
                      : "");
  meta.slot = "terminal";
  meta.created = utc_timestamp();

  ProbabilityTensor t(std::move(context_ids), std::move(group_ids),
                      std::move(meta));
  for (std::size_t c = 0; c < spec.num_contexts; ++c) {
    for (std::size_t g = 0; g < spec.num_groups; ++g) {
      const auto& dist = cells[c * spec.num_groups + g];
      TensorCell cell;
      for (std::size_t j = 0; j < spec.num_categories; ++j) {
        cell.probs["y" + std::to_string(j)] = dist[j];
      }
      t.set_cell(c, g, std::move(cell));
    }
  }
  return t;
}

WordSchema baseline_schema(const BaselineSpec& spec) {
  validate(spec);
  std::vector<GroupSpec> groups(spec.num_groups);
  for (std::size_t g = 0; g < spec.num_groups; ++g) {
    groups[g].id = "g" + std::to_string(g);
    groups[g].words = {"g" + std::to_string(g)};
  }
  std::vector<CategorySpec> categories(spec.num_categories);
  for (std::size_t j = 0; j < spec.num_categories; ++j) {
    categories[j].id = "y" + std::to_string(j);
    categories[j].words = {"y" + std::to_string(j)};
  }
  return WordSchema(std::move(groups), std::move(categories), {});
}

ExpectedMetrics expected_metrics(const BaselineSpec& spec) {
  validate(spec);
  const double max_risk = static_cast<double>(spec.num_categories) - 1.0;
  switch (spec.kind) {
    case BaselineKind::IdeallyUnbiased:
      return {0.0, 0.0, 0.0};
    case BaselineKind::Stereotyped:
      return {max_risk, max_risk, 0.0};
    case BaselineKind::RandomlyStereotyped:
      return {max_risk, 0.0, max_risk};
  }
  throw UnsupportedSpec("no closed form for the requested baseline");
}

}  // namespace pvf
