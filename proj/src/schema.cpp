// SPDX-License-Identifier: Apache-2.0
#include "pvf/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace pvf {

XDistribution parse_x_distribution(const std::string& text) {
  if (text == "uniform") return XDistribution::Uniform;
  if (text == "weighted") return XDistribution::Weighted;
  throw ConfigError("unknown x-distribution: " + text);
}

std::string to_string(XDistribution dist) {
  return dist == XDistribution::Uniform ? "uniform" : "weighted";
}

namespace {

bool is_lower_token(const std::string& w) {
  if (w.empty()) return false;
  for (char c : w) {
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '\'')) {
      return false;
    }
  }
  return true;
}

void check_word(const std::string& w, const std::string& where) {
  if (!is_lower_token(w)) {
    throw SchemaError("word '" + w + "' in " + where +
                      " must be a single lowercase token");
  }
}

}  // namespace

WordSchema::WordSchema(std::vector<GroupSpec> groups,
                       std::vector<CategorySpec> categories,
                       std::vector<std::string> exclusions)
    : groups_(std::move(groups)),
      categories_(std::move(categories)),
      exclusions_(std::move(exclusions)) {
  build_indexes();
}

void WordSchema::build_indexes() {
  if (groups_.empty()) {
    throw SchemaError("schema has no groups");
  }
  if (categories_.size() < 2) {
    throw SchemaError("schema needs at least two attribute categories");
  }

  std::set<std::string> group_ids;
  std::size_t weighted = 0;
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& g = groups_[i];
    if (g.id.empty() || !group_ids.insert(g.id).second) {
      throw SchemaError("missing or duplicate group id '" + g.id + "'");
    }
    if (g.words.empty()) {
      throw SchemaError("group '" + g.id + "' has no words");
    }
    if (g.weight) {
      if (!(*g.weight > 0.0)) {
        throw SchemaError("group '" + g.id + "' has non-positive weight");
      }
      ++weighted;
    }
    for (const auto& w : g.words) {
      check_word(w, "group '" + g.id + "'");
      if (!word_to_group_.emplace(w, i).second) {
        throw SchemaError("group word '" + w + "' appears more than once");
      }
    }
  }
  if (weighted != 0 && weighted != groups_.size()) {
    throw SchemaError("group weights must be given for all groups or none");
  }

  std::set<std::string> category_ids;
  category_index_.num_categories = categories_.size();
  for (std::size_t j = 0; j < categories_.size(); ++j) {
    const auto& cat = categories_[j];
    if (cat.id.empty() || !category_ids.insert(cat.id).second) {
      throw SchemaError("missing or duplicate category id '" + cat.id + "'");
    }
    if (cat.words.empty()) {
      throw SchemaError("category '" + cat.id + "' has no words");
    }
    for (const auto& w : cat.words) {
      check_word(w, "category '" + cat.id + "'");
      if (!category_index_.word_to_category.emplace(w, j).second) {
        throw SchemaError("word '" + w + "' belongs to more than one category");
      }
      if (word_to_group_.contains(w)) {
        throw SchemaError("word '" + w + "' is both a group and category word");
      }
    }
  }

  for (const auto& w : exclusions_) {
    check_word(w, "exclusions");
    exclusion_set_.insert(w);
  }
}

WordSchema WordSchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<GroupSpec> groups;
    for (const auto& jg : j.at("groups")) {
      GroupSpec g;
      g.id = jg.at("id").get<std::string>();
      g.words = jg.at("words").get<std::vector<std::string>>();
      if (jg.contains("weight")) {
        g.weight = jg.at("weight").get<double>();
      }
      groups.push_back(std::move(g));
    }
    std::vector<CategorySpec> categories;
    for (const auto& jc : j.at("categories")) {
      CategorySpec c;
      c.id = jc.at("id").get<std::string>();
      c.words = jc.at("words").get<std::vector<std::string>>();
      categories.push_back(std::move(c));
    }
    std::vector<std::string> exclusions;
    if (j.contains("exclusions")) {
      exclusions = j.at("exclusions").get<std::vector<std::string>>();
    }
    return WordSchema(std::move(groups), std::move(categories),
                      std::move(exclusions));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema JSON: ") + e.what());
  }
}

WordSchema WordSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read schema file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json WordSchema::to_json() const {
  nlohmann::json j;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : groups_) {
    nlohmann::json jg = {{"id", g.id}, {"words", g.words}};
    if (g.weight) jg["weight"] = *g.weight;
    j["groups"].push_back(jg);
  }
  j["categories"] = nlohmann::json::array();
  for (const auto& c : categories_) {
    j["categories"].push_back({{"id", c.id}, {"words", c.words}});
  }
  j["exclusions"] = exclusions_;
  return j;
}

void WordSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write schema file: " + path.string());
  }
  out << to_json().dump(2) << "\n";
}

std::vector<std::string> WordSchema::candidate_words() const {
  std::set<std::string> words;
  for (const auto& c : categories_) {
    words.insert(c.words.begin(), c.words.end());
  }
  return {words.begin(), words.end()};
}

std::map<std::string, double> WordSchema::x_weights(XDistribution dist) const {
  std::map<std::string, double> out;
  if (dist == XDistribution::Uniform) {
    const double w = 1.0 / static_cast<double>(groups_.size());
    for (const auto& g : groups_) {
      out[g.id] = w;
    }
    return out;
  }
  double total = 0.0;
  for (const auto& g : groups_) {
    if (!g.weight) {
      throw SchemaError("weighted x-distribution requested but group '" +
                        g.id + "' has no weight");
    }
    total += *g.weight;
  }
  for (const auto& g : groups_) {
    out[g.id] = *g.weight / total;
  }
  return out;
}

const GroupSpec* WordSchema::group_for_word(const std::string& token) const {
  auto it = word_to_group_.find(token);
  return it == word_to_group_.end() ? nullptr : &groups_[it->second];
}

const CategorySpec* WordSchema::category_for_word(
    const std::string& token) const {
  auto it = category_index_.word_to_category.find(token);
  return it == category_index_.word_to_category.end() ? nullptr
                                                      : &categories_[it->second];
}

bool WordSchema::is_exclusion(const std::string& token) const {
  return exclusion_set_.contains(token);
}

}  // namespace pvf
