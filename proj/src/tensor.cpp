// SPDX-License-Identifier: Apache-2.0
#include "pvf/tensor.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <unordered_map>

namespace pvf {

ProbabilityTensor::ProbabilityTensor(std::vector<std::string> context_ids,
                                     std::vector<std::string> group_ids,
                                     TensorMeta meta)
    : context_ids_(std::move(context_ids)),
      group_ids_(std::move(group_ids)),
      meta_(std::move(meta)) {
  cells_.resize(context_ids_.size() * group_ids_.size());
}

std::size_t ProbabilityTensor::flat(std::size_t context,
                                    std::size_t group) const {
  if (context >= context_ids_.size() || group >= group_ids_.size()) {
    throw IndexOutOfRange("tensor cell (" + std::to_string(context) + ", " +
                          std::to_string(group) + ") out of range");
  }
  return context * group_ids_.size() + group;
}

bool ProbabilityTensor::has_cell(std::size_t context, std::size_t group) const {
  return cells_[flat(context, group)].has_value();
}

const TensorCell& ProbabilityTensor::cell(std::size_t context,
                                          std::size_t group) const {
  const auto& c = cells_[flat(context, group)];
  if (!c) {
    throw IncompleteTensor("missing cell (" + context_ids_[context] + ", " +
                           group_ids_[group] + ")");
  }
  return *c;
}

void ProbabilityTensor::set_cell(std::size_t context, std::size_t group,
                                 TensorCell cell) {
  cells_[flat(context, group)] = std::move(cell);
}

std::optional<std::size_t> ProbabilityTensor::context_index(
    const std::string& id) const {
  for (std::size_t i = 0; i < context_ids_.size(); ++i) {
    if (context_ids_[i] == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> ProbabilityTensor::group_index(
    const std::string& id) const {
  for (std::size_t i = 0; i < group_ids_.size(); ++i) {
    if (group_ids_[i] == id) return i;
  }
  return std::nullopt;
}

bool ProbabilityTensor::complete() const {
  for (const auto& c : cells_) {
    if (!c) return false;
  }
  return !cells_.empty();
}

void ProbabilityTensor::validate_complete(
    const std::vector<std::string>& candidate_words) const {
  for (std::size_t c = 0; c < context_ids_.size(); ++c) {
    for (std::size_t g = 0; g < group_ids_.size(); ++g) {
      const auto& cell = cells_[c * group_ids_.size() + g];
      if (!cell) {
        throw IncompleteTensor("missing cell (" + context_ids_[c] + ", " +
                               group_ids_[g] + ")");
      }
      for (const auto& word : candidate_words) {
        if (!cell->probs.contains(word)) {
          throw IncompleteTensor("cell (" + context_ids_[c] + ", " +
                                 group_ids_[g] + ") lacks candidate '" + word +
                                 "'");
        }
      }
    }
  }
}

nlohmann::json ProbabilityTensor::to_json() const {
  nlohmann::json j;
  j["meta"] = {{"backend", meta_.backend},
               {"schema_hash", meta_.schema_hash},
               {"ctx_hash", meta_.ctx_hash},
               {"slot", meta_.slot},
               {"created", meta_.created}};
  j["contexts"] = context_ids_;
  j["groups"] = group_ids_;
  j["cells"] = nlohmann::json::array();
  for (std::size_t c = 0; c < context_ids_.size(); ++c) {
    for (std::size_t g = 0; g < group_ids_.size(); ++g) {
      const auto& cell = cells_[c * group_ids_.size() + g];
      if (!cell) continue;
      nlohmann::json jc = {{"context_id", context_ids_[c]},
                           {"group_id", group_ids_[g]},
                           {"probs", cell->probs}};
      if (!cell->warnings.empty()) {
        jc["warnings"] = cell->warnings;
      }
      j["cells"].push_back(std::move(jc));
    }
  }
  return j;
}

ProbabilityTensor ProbabilityTensor::from_json(const nlohmann::json& j) {
  try {
    TensorMeta meta;
    const auto& jm = j.at("meta");
    meta.backend = jm.at("backend").get<std::string>();
    meta.schema_hash = jm.at("schema_hash").get<std::string>();
    meta.ctx_hash = jm.at("ctx_hash").get<std::string>();
    meta.slot = jm.value("slot", std::string{});
    meta.created = jm.at("created").get<std::string>();

    ProbabilityTensor t(j.at("contexts").get<std::vector<std::string>>(),
                        j.at("groups").get<std::vector<std::string>>(),
                        std::move(meta));

    std::unordered_map<std::string, std::size_t> ctx_idx, grp_idx;
    for (std::size_t i = 0; i < t.context_ids_.size(); ++i) {
      ctx_idx[t.context_ids_[i]] = i;
    }
    for (std::size_t i = 0; i < t.group_ids_.size(); ++i) {
      grp_idx[t.group_ids_[i]] = i;
    }

    for (const auto& jc : j.at("cells")) {
      const auto cid = jc.at("context_id").get<std::string>();
      const auto gid = jc.at("group_id").get<std::string>();
      auto ci = ctx_idx.find(cid);
      auto gi = grp_idx.find(gid);
      if (ci == ctx_idx.end() || gi == grp_idx.end()) {
        throw IncompleteTensor("cell (" + cid + ", " + gid +
                               ") not covered by the tensor axes");
      }
      TensorCell cell;
      cell.probs = jc.at("probs").get<std::map<std::string, double>>();
      if (jc.contains("warnings")) {
        cell.warnings = jc.at("warnings").get<std::vector<std::string>>();
      }
      t.set_cell(ci->second, gi->second, std::move(cell));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile(std::string("malformed tensor JSON: ") + e.what());
  }
}

void ProbabilityTensor::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

ProbabilityTensor ProbabilityTensor::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read tensor file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedFile("tensor file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ConfigError("cannot write file: " + tmp);
    }
    out << contents;
    out.flush();
    if (!out) {
      throw ConfigError("short write: " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pvf
