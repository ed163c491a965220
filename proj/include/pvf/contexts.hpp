// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file contexts.hpp
 * @brief Context templates mined from a corpus and their frequency-derived
 *        weights.
 *
 * A template skeleton carries exactly one [X] slot (group word) and one [Y]
 * slot (attribute word). A ContextSet is the tallied collection, sorted by
 * (count desc, skeleton asc) so that identical mining inputs always produce
 * byte-identical files.
 *
 * File format (JSON): {"mode": "x-then-y"|"y-at-end",
 *                      "templates": [{"skeleton": "...", "count": 1}, ...]}
 * Weights are recomputed as count/total on load.
 */

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvf/metrics.hpp"

namespace pvf {

enum class SlotOrder { XthenY, YatEnd };

SlotOrder parse_slot_order(const std::string& text);
std::string to_string(SlotOrder order);

struct ContextTemplate {
  std::string skeleton;
  SlotOrder slot_order = SlotOrder::XthenY;
  std::uint64_t count = 1;
};

/// Throws BadTemplate unless the skeleton holds exactly one [X] and one [Y].
void validate_skeleton(const std::string& skeleton);

class ContextSet {
 public:
  /// Takes already-tallied templates; sorts them canonically.
  ContextSet(std::vector<ContextTemplate> templates, SlotOrder mode);

  static ContextSet load(const std::filesystem::path& path);
  static ContextSet from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<ContextTemplate>& templates() const { return templates_; }
  SlotOrder mode() const { return mode_; }
  std::size_t size() const { return templates_.size(); }
  bool empty() const { return templates_.empty(); }

  /// Stable per-template id used in tensor files ("c0", "c1", ...).
  std::string context_id(std::size_t index) const;

  /// count / total over all templates.
  WeightedContexts weights() const;

 private:
  std::vector<ContextTemplate> templates_;
  SlotOrder mode_;
};

}  // namespace pvf
