// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file tensor.hpp
 * @brief The |C| x |X| probability tensor: per-cell candidate-token
 *        probabilities collected from a model backend.
 *
 * File format (JSON):
 *   {
 *     "meta": {"backend": "...", "schema_hash": "...", "ctx_hash": "...",
 *              "slot": "terminal"|"masked", "created": "..."},
 *     "cells": [{"context_id": "c0", "group_id": "doctor",
 *                "probs": {"he": 0.5, ...}, "warnings": [...]}, ...]
 *   }
 * Cells are serialized in canonical order (contexts outer, groups inner);
 * probabilities round-trip exactly through the JSON encoding.
 */

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvf/errors.hpp"

namespace pvf {

class WordSchema;
class ContextSet;

struct TensorMeta {
  std::string backend;
  std::string schema_hash;
  std::string ctx_hash;
  std::string slot;  // "terminal" or "masked"
  std::string created;
};

struct TensorCell {
  std::map<std::string, double> probs;  // candidate word -> probability
  std::vector<std::string> warnings;
};

class ProbabilityTensor {
 public:
  ProbabilityTensor() = default;
  ProbabilityTensor(std::vector<std::string> context_ids,
                    std::vector<std::string> group_ids, TensorMeta meta);

  const std::vector<std::string>& context_ids() const { return context_ids_; }
  const std::vector<std::string>& group_ids() const { return group_ids_; }
  const TensorMeta& meta() const { return meta_; }
  TensorMeta& meta() { return meta_; }

  std::size_t num_contexts() const { return context_ids_.size(); }
  std::size_t num_groups() const { return group_ids_.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  bool has_cell(std::size_t context, std::size_t group) const;
  const TensorCell& cell(std::size_t context, std::size_t group) const;
  void set_cell(std::size_t context, std::size_t group, TensorCell cell);

  std::optional<std::size_t> context_index(const std::string& id) const;
  std::optional<std::size_t> group_index(const std::string& id) const;

  bool complete() const;

  /// Throws IncompleteTensor naming the first gap: a missing cell or a cell
  /// not covering every candidate word.
  void validate_complete(const std::vector<std::string>& candidate_words) const;

  nlohmann::json to_json() const;
  static ProbabilityTensor from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ProbabilityTensor load(const std::filesystem::path& path);

 private:
  std::size_t flat(std::size_t context, std::size_t group) const;

  std::vector<std::string> context_ids_;
  std::vector<std::string> group_ids_;
  std::vector<std::optional<TensorCell>> cells_;
  TensorMeta meta_;
};

/// RFC 3339 UTC timestamp for provenance fields.
std::string utc_timestamp();

/// Atomic write: dump to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace pvf
