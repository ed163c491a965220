// SPDX-License-Identifier: Apache-2.0
#include "pvf/contexts.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace pvf {

SlotOrder parse_slot_order(const std::string& text) {
  if (text == "x-then-y") return SlotOrder::XthenY;
  if (text == "y-at-end") return SlotOrder::YatEnd;
  throw ConfigError("unknown slot order: " + text);
}

std::string to_string(SlotOrder order) {
  return order == SlotOrder::XthenY ? "x-then-y" : "y-at-end";
}

namespace {

std::size_t count_marker(const std::string& s, const std::string& marker) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(marker); pos != std::string::npos;
       pos = s.find(marker, pos + marker.size())) {
    ++n;
  }
  return n;
}

}  // namespace

void validate_skeleton(const std::string& skeleton) {
  if (count_marker(skeleton, "[X]") != 1 || count_marker(skeleton, "[Y]") != 1) {
    throw BadTemplate("skeleton must contain exactly one [X] and one [Y]: '" +
                      skeleton + "'");
  }
}

ContextSet::ContextSet(std::vector<ContextTemplate> templates, SlotOrder mode)
    : mode_(mode) {
  // Merge equal skeletons, then sort canonically.
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : templates) {
    validate_skeleton(t.skeleton);
    if (t.count == 0) {
      throw BadTemplate("template count must be >= 1: '" + t.skeleton + "'");
    }
    counts[t.skeleton] += t.count;
  }
  templates_.reserve(counts.size());
  for (const auto& [skeleton, count] : counts) {
    templates_.push_back(ContextTemplate{skeleton, mode_, count});
  }
  std::sort(templates_.begin(), templates_.end(),
            [](const ContextTemplate& a, const ContextTemplate& b) {
              if (a.count != b.count) return a.count > b.count;
              return a.skeleton < b.skeleton;
            });
}

ContextSet ContextSet::from_json(const nlohmann::json& j) {
  try {
    SlotOrder mode = parse_slot_order(j.at("mode").get<std::string>());
    std::vector<ContextTemplate> templates;
    for (const auto& jt : j.at("templates")) {
      ContextTemplate t;
      t.skeleton = jt.at("skeleton").get<std::string>();
      t.count = jt.at("count").get<std::uint64_t>();
      t.slot_order = mode;
      templates.push_back(std::move(t));
    }
    return ContextSet(std::move(templates), mode);
  } catch (const nlohmann::json::exception& e) {
    throw BadTemplate(std::string("malformed contexts JSON: ") + e.what());
  }
}

ContextSet ContextSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read contexts file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw BadTemplate("contexts file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ContextSet::to_json() const {
  nlohmann::json j;
  j["mode"] = pvf::to_string(mode_);
  j["templates"] = nlohmann::json::array();
  for (const auto& t : templates_) {
    j["templates"].push_back({{"skeleton", t.skeleton}, {"count", t.count}});
  }
  return j;
}

void ContextSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write contexts file: " + path.string());
  }
  out << to_json().dump(2) << "\n";
}

std::string ContextSet::context_id(std::size_t index) const {
  return "c" + std::to_string(index);
}

WeightedContexts ContextSet::weights() const {
  if (templates_.empty()) {
    throw InvalidDistribution("context set is empty");
  }
  double total = 0.0;
  for (const auto& t : templates_) {
    total += static_cast<double>(t.count);
  }
  std::vector<double> w(templates_.size());
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    w[i] = static_cast<double>(templates_[i].count) / total;
  }
  return WeightedContexts(std::move(w));
}

}  // namespace pvf
