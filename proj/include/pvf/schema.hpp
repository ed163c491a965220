// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file schema.hpp
 * @brief Word schema: demographic groups X, attribute categories Y, and the
 *        attribute-revealing exclusion list used by the context miner.
 *
 * File format (JSON):
 *   {
 *     "groups":     [{"id": "doctor", "words": ["doctor"], "weight": 800.0}],
 *     "categories": [{"id": "male",   "words": ["he", "him", ...]}],
 *     "exclusions": ["beard", ...]
 *   }
 *
 * Group weights are population counts; they are optional but must be given
 * either for every group or for none. Words are single lowercase tokens and
 * each word belongs to at most one category.
 */

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pvf/metrics.hpp"

namespace pvf {

enum class XDistribution { Uniform, Weighted };

XDistribution parse_x_distribution(const std::string& text);
std::string to_string(XDistribution dist);

struct GroupSpec {
  std::string id;
  std::vector<std::string> words;  // first word is the canonical prompt word
  std::optional<double> weight;    // population count
};

struct CategorySpec {
  std::string id;
  std::vector<std::string> words;
};

class WordSchema {
 public:
  WordSchema(std::vector<GroupSpec> groups, std::vector<CategorySpec> categories,
             std::vector<std::string> exclusions);

  static WordSchema from_json(const nlohmann::json& j);
  static WordSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<GroupSpec>& groups() const { return groups_; }
  const std::vector<CategorySpec>& categories() const { return categories_; }
  const std::vector<std::string>& exclusions() const { return exclusions_; }

  std::size_t num_groups() const { return groups_.size(); }
  std::size_t num_categories() const { return categories_.size(); }

  /// Word -> category index map for normalize_categories.
  const CategoryIndex& category_index() const { return category_index_; }

  /// Union of all category words, deduplicated and sorted.
  std::vector<std::string> candidate_words() const;

  /// Normalized distribution over group ids. Weighted requires every group
  /// to carry a weight.
  std::map<std::string, double> x_weights(XDistribution dist) const;

  // token lookups used by the miner (tokens must already be lowercase)
  const GroupSpec* group_for_word(const std::string& token) const;
  const CategorySpec* category_for_word(const std::string& token) const;
  bool is_exclusion(const std::string& token) const;

 private:
  void build_indexes();

  std::vector<GroupSpec> groups_;
  std::vector<CategorySpec> categories_;
  std::vector<std::string> exclusions_;

  CategoryIndex category_index_;
  std::unordered_map<std::string, std::size_t> word_to_group_;
  std::unordered_set<std::string> exclusion_set_;
};

}  // namespace pvf
