// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file probe.hpp
 * @brief Collects candidate-token probabilities from a model backend and
 *        assembles the probability tensor.
 *
 * Backends:
 *  - FileBackend: reads cells from a previously written tensor file (also
 *    how baseline tensors are consumed).
 *  - HttpBackend: POST {base}/v1/probe with
 *      {"prompt": "...", "slot": "terminal"|"masked", "candidates": [...]}
 *    expecting {"logprobs": {"word": <natural log prob>}, "model": "..."}.
 *    Transient transport failures and 5xx responses are retried with
 *    exponential backoff (3 retries).
 *  - OpenAiBackend: best-effort adapter for OpenAI-style completion
 *    endpoints with logprobs; terminal slots only.
 *
 * collect() walks the |C| x |X| grid with a bounded number of in-flight
 * requests, appending each finished cell to a sidecar cache
 * (<out>.partial.jsonl) so interrupted runs resume where they stopped.
 * Re-running over a complete output issues zero backend requests.
 */

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pvf/contexts.hpp"
#include "pvf/schema.hpp"
#include "pvf/tensor.hpp"

namespace pvf {

enum class SlotMode { Masked, Terminal };

SlotMode parse_slot_mode(const std::string& text);
std::string to_string(SlotMode mode);

struct ProbeRequest {
  ContextTemplate tmpl;
  std::string context_id;
  std::string group_id;
  std::string group_word;
  std::vector<std::string> candidate_words;
  SlotMode slot = SlotMode::Terminal;
  std::string prompt;  // rendered from tmpl + group_word
};

struct TokenProbability {
  std::string word;
  double prob = 0.0;
};

struct QueryResult {
  std::vector<TokenProbability> probs;  // one entry per requested candidate
  std::vector<std::string> warnings;    // e.g. candidates missing upstream
};

/**
 * Substitutes the group word (lowercased) for [X] and leaves a single
 * unfilled [Y]. Masked mode keeps [Y] where the template put it; Terminal
 * mode truncates the rendering right after [Y] so the prediction slot is the
 * final token position. Throws BadTemplate for malformed templates.
 */
std::string render_prompt(const ContextTemplate& tmpl,
                          const std::string& group_word, SlotMode mode);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual QueryResult query(const ProbeRequest& request) = 0;
  virtual std::string descriptor() const = 0;
};

class FileBackend final : public Backend {
 public:
  explicit FileBackend(const std::filesystem::path& tensor_file);
  explicit FileBackend(ProbabilityTensor tensor, std::string descriptor);

  QueryResult query(const ProbeRequest& request) override;
  std::string descriptor() const override { return descriptor_; }

 private:
  ProbabilityTensor tensor_;
  std::string descriptor_;
};

struct HttpOptions {
  int timeout_ms = 30000;
  std::string auth_token;  // sent as "Authorization: Bearer <token>"
  int max_retries = 3;
  int backoff_ms = 100;  // doubled per retry
};

class HttpBackend final : public Backend {
 public:
  HttpBackend(std::string base_url, HttpOptions options = {});

  QueryResult query(const ProbeRequest& request) override;
  std::string descriptor() const override { return base_url_; }

 private:
  std::string base_url_;
  HttpOptions options_;
};

/// Adapter for OpenAI-compatible /v1/completions with logprobs. Scores each
/// candidate by its first-token logprob among the returned top logprobs
/// (leading-space variants included); anything absent is reported as 0 with
/// a warning. Terminal slots only.
class OpenAiBackend final : public Backend {
 public:
  OpenAiBackend(std::string base_url, std::string model,
                HttpOptions options = {});

  QueryResult query(const ProbeRequest& request) override;
  std::string descriptor() const override;

 private:
  std::string base_url_;
  std::string model_;
  HttpOptions options_;
};

struct CollectOptions {
  std::filesystem::path output_file;
  SlotMode slot = SlotMode::Terminal;
  int concurrency = 8;  // bounded in-flight requests
  bool resume = true;
  std::string schema_hash;  // provenance, may be empty
  std::string ctx_hash;
};

struct CollectStats {
  std::uint64_t queried = 0;
  std::uint64_t cached = 0;
  std::uint64_t warnings = 0;
};

/**
 * Fills every (context, group) cell with probabilities for the union of all
 * category words. Completion is all-or-error per cell; failures carry the
 * cell coordinates. The finished tensor is written atomically to
 * options.output_file and the sidecar cache is removed.
 */
ProbabilityTensor collect(Backend& backend, const ContextSet& contexts,
                          const WordSchema& schema,
                          const CollectOptions& options,
                          CollectStats* stats = nullptr);

}  // namespace pvf
