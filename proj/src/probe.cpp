// SPDX-License-Identifier: Apache-2.0
#include "pvf/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace pvf {

SlotMode parse_slot_mode(const std::string& text) {
  if (text == "masked") return SlotMode::Masked;
  if (text == "terminal") return SlotMode::Terminal;
  throw ConfigError("unknown slot mode: " + text);
}

std::string to_string(SlotMode mode) {
  return mode == SlotMode::Masked ? "masked" : "terminal";
}

std::string render_prompt(const ContextTemplate& tmpl,
                          const std::string& group_word, SlotMode mode) {
  validate_skeleton(tmpl.skeleton);
  if (group_word.empty()) {
    throw BadTemplate("group word is empty");
  }
  std::string word;
  word.reserve(group_word.size());
  for (char c : group_word) {
    word.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::string prompt = tmpl.skeleton;
  if (mode == SlotMode::Terminal &&
      prompt.find("[Y]") < prompt.find("[X]")) {
    throw BadTemplate("terminal rendering needs [X] before [Y]: '" +
                      tmpl.skeleton + "'");
  }
  prompt.replace(prompt.find("[X]"), 3, word);
  if (mode == SlotMode::Terminal) {
    // the prediction slot must be the final token position
    prompt.resize(prompt.find("[Y]") + 3);
  }
  return prompt;
}

// ---------------------------------------------------------------------------
// FileBackend

FileBackend::FileBackend(const std::filesystem::path& tensor_file)
    : tensor_(ProbabilityTensor::load(tensor_file)),
      descriptor_("file:" + tensor_file.string()) {}

FileBackend::FileBackend(ProbabilityTensor tensor, std::string descriptor)
    : tensor_(std::move(tensor)), descriptor_(std::move(descriptor)) {}

QueryResult FileBackend::query(const ProbeRequest& request) {
  auto c = tensor_.context_index(request.context_id);
  auto g = tensor_.group_index(request.group_id);
  if (!c || !g) {
    throw IncompleteTensor("backend tensor has no cell (" +
                           request.context_id + ", " + request.group_id + ")");
  }
  const TensorCell& cell = tensor_.cell(*c, *g);
  QueryResult out;
  out.probs.reserve(request.candidate_words.size());
  for (const auto& word : request.candidate_words) {
    auto it = cell.probs.find(word);
    if (it == cell.probs.end()) {
      out.probs.push_back({word, 0.0});
      out.warnings.push_back("candidate '" + word + "' missing in backend");
    } else {
      out.probs.push_back({word, it->second});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP backends

namespace {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("backend url needs a scheme: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {base_url, ""};
  }
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') {
    prefix.pop_back();
  }
  return {base_url.substr(0, path_start), prefix};
}

// POST with retry on transport failure and 5xx. Returns the response body of
// a 200; maps HTTP failures to typed errors.
std::string post_json_with_retry(const std::string& base_url,
                                 const HttpOptions& options,
                                 const std::string& path,
                                 const std::string& body) {
  const ParsedUrl url = parse_base_url(base_url);
  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          options.backoff_ms * (1 << (attempt - 1))));
    }
    httplib::Client client(url.host_port);
    client.set_connection_timeout(0, options.timeout_ms * 1000LL);
    client.set_read_timeout(0, options.timeout_ms * 1000LL);
    if (!options.auth_token.empty()) {
      client.set_bearer_token_auth(options.auth_token);
    }
    auto res = client.Post(url.path_prefix + path, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      return res->body;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthFailure("backend " + base_url + " returned HTTP " +
                        std::to_string(res->status));
    }
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw MalformedResponse("backend " + base_url + " returned HTTP " +
                            std::to_string(res->status) + ": " + res->body);
  }
  throw BackendUnavailable("backend " + base_url + " unreachable after " +
                           std::to_string(options.max_retries + 1) +
                           " attempts (" + last_failure + ")");
}

}  // namespace

HttpBackend::HttpBackend(std::string base_url, HttpOptions options)
    : base_url_(std::move(base_url)), options_(std::move(options)) {}

QueryResult HttpBackend::query(const ProbeRequest& request) {
  nlohmann::json body = {{"prompt", request.prompt},
                         {"slot", to_string(request.slot)},
                         {"candidates", request.candidate_words}};
  const std::string response_body =
      post_json_with_retry(base_url_, options_, "/v1/probe", body.dump());

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("backend response is not JSON: ") +
                            e.what());
  }
  if (!response.contains("logprobs") || !response["logprobs"].is_object()) {
    throw MalformedResponse("backend response lacks a logprobs object");
  }
  const auto& logprobs = response["logprobs"];
  QueryResult out;
  out.probs.reserve(request.candidate_words.size());
  for (const auto& word : request.candidate_words) {
    if (logprobs.contains(word)) {
      if (!logprobs[word].is_number()) {
        throw MalformedResponse("logprob for '" + word + "' is not a number");
      }
      out.probs.push_back({word, std::exp(logprobs[word].get<double>())});
    } else {
      out.probs.push_back({word, 0.0});
      out.warnings.push_back("candidate '" + word + "' missing in response");
    }
  }
  return out;
}

OpenAiBackend::OpenAiBackend(std::string base_url, std::string model,
                             HttpOptions options)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      options_(std::move(options)) {}

std::string OpenAiBackend::descriptor() const {
  return base_url_ + " (openai, model=" + model_ + ")";
}

QueryResult OpenAiBackend::query(const ProbeRequest& request) {
  if (request.slot != SlotMode::Terminal) {
    throw ConfigError("the OpenAI adapter supports terminal slots only");
  }
  // prompt prefix: everything before [Y], trailing whitespace removed
  std::string prefix = request.prompt.substr(0, request.prompt.find("[Y]"));
  while (!prefix.empty() &&
         std::isspace(static_cast<unsigned char>(prefix.back()))) {
    prefix.pop_back();
  }
  nlohmann::json body = {{"model", model_},
                         {"prompt", prefix},
                         {"max_tokens", 1},
                         {"temperature", 0},
                         {"logprobs", 20},
                         {"echo", false}};
  const std::string response_body =
      post_json_with_retry(base_url_, options_, "/v1/completions", body.dump());

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("completion response is not JSON: ") +
                            e.what());
  }
  nlohmann::json top;
  try {
    top = response.at("choices").at(0).at("logprobs").at("top_logprobs").at(0);
  } catch (const nlohmann::json::exception&) {
    throw MalformedResponse("completion response lacks top_logprobs");
  }
  QueryResult out;
  for (const auto& word : request.candidate_words) {
    // completion tokens usually carry a leading space
    const std::string spaced = " " + word;
    double prob = 0.0;
    bool found = false;
    if (top.contains(spaced) && top[spaced].is_number()) {
      prob = std::exp(top[spaced].get<double>());
      found = true;
    } else if (top.contains(word) && top[word].is_number()) {
      prob = std::exp(top[word].get<double>());
      found = true;
    }
    out.probs.push_back({word, prob});
    if (!found) {
      out.warnings.push_back("candidate '" + word +
                             "' not among returned top logprobs");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// collect

namespace {

nlohmann::json partial_meta(const Backend& backend,
                            const CollectOptions& options) {
  return {{"backend", backend.descriptor()},
          {"schema_hash", options.schema_hash},
          {"ctx_hash", options.ctx_hash},
          {"slot", to_string(options.slot)}};
}

bool tensor_matches(const ProbabilityTensor& t, const CollectOptions& options,
                    const std::vector<std::string>& context_ids,
                    const std::vector<std::string>& group_ids) {
  return t.meta().schema_hash == options.schema_hash &&
         t.meta().ctx_hash == options.ctx_hash &&
         t.meta().slot == to_string(options.slot) &&
         t.context_ids() == context_ids && t.group_ids() == group_ids;
}

}  // namespace

ProbabilityTensor collect(Backend& backend, const ContextSet& contexts,
                          const WordSchema& schema,
                          const CollectOptions& options, CollectStats* stats) {
  if (contexts.empty()) {
    throw BadTemplate("context set is empty");
  }
  const auto candidates = schema.candidate_words();

  std::vector<std::string> context_ids(contexts.size());
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    context_ids[c] = contexts.context_id(c);
  }
  std::vector<std::string> group_ids(schema.num_groups());
  for (std::size_t g = 0; g < schema.num_groups(); ++g) {
    group_ids[g] = schema.groups()[g].id;
  }

  CollectStats local_stats;

  // A finished output satisfies the run without touching the backend.
  if (options.resume && std::filesystem::exists(options.output_file)) {
    ProbabilityTensor existing = ProbabilityTensor::load(options.output_file);
    if (!tensor_matches(existing, options, context_ids, group_ids)) {
      throw ProvenanceMismatch(
          "existing tensor " + options.output_file.string() +
          " was produced from different inputs; remove it to re-collect");
    }
    existing.validate_complete(candidates);
    local_stats.cached = existing.num_contexts() * existing.num_groups();
    if (stats) *stats = local_stats;
    return existing;
  }

  TensorMeta meta;
  meta.backend = backend.descriptor();
  meta.schema_hash = options.schema_hash;
  meta.ctx_hash = options.ctx_hash;
  meta.slot = to_string(options.slot);
  ProbabilityTensor tensor(context_ids, group_ids, meta);

  const auto partial_path =
      std::filesystem::path(options.output_file.string() + ".partial.jsonl");
  const nlohmann::json expected_meta = partial_meta(backend, options);

  std::ofstream cache;
  if (options.resume && std::filesystem::exists(partial_path)) {
    std::ifstream in(partial_path);
    std::string line;
    if (std::getline(in, line)) {
      nlohmann::json found_meta;
      try {
        found_meta = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw ProvenanceMismatch("unreadable cache header in " +
                                 partial_path.string());
      }
      if (found_meta != expected_meta) {
        throw ProvenanceMismatch(
            "cache " + partial_path.string() +
            " was produced from different inputs; remove it to re-collect");
      }
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json jc;
        try {
          jc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
          continue;  // torn tail line from an interrupted write
        }
        auto c = tensor.context_index(jc.at("context_id").get<std::string>());
        auto g = tensor.group_index(jc.at("group_id").get<std::string>());
        if (!c || !g) continue;
        TensorCell cell;
        cell.probs = jc.at("probs").get<std::map<std::string, double>>();
        if (jc.contains("warnings")) {
          cell.warnings = jc.at("warnings").get<std::vector<std::string>>();
        }
        tensor.set_cell(*c, *g, std::move(cell));
        ++local_stats.cached;
      }
    }
    cache.open(partial_path, std::ios::app);
  } else {
    cache.open(partial_path, std::ios::trunc);
    cache << expected_meta.dump() << "\n";
    cache.flush();
  }
  if (!cache) {
    throw ConfigError("cannot write cache file: " + partial_path.string());
  }

  // Work list in canonical order: contexts outer, groups inner.
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    for (std::size_t g = 0; g < schema.num_groups(); ++g) {
      if (!tensor.has_cell(c, g)) {
        work.emplace_back(c, g);
      }
    }
  }

  std::mutex writer_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error = nullptr;
  std::mutex error_mutex;

  auto run_cell = [&](std::size_t c, std::size_t g) {
    ProbeRequest request;
    request.tmpl = contexts.templates()[c];
    request.context_id = context_ids[c];
    request.group_id = group_ids[g];
    request.group_word = schema.groups()[g].words.front();
    request.candidate_words = candidates;
    request.slot = options.slot;
    request.prompt = render_prompt(request.tmpl, request.group_word,
                                   options.slot);
    QueryResult result;
    try {
      result = backend.query(request);
    } catch (const Error& e) {
      throw Error(e.kind(), "cell (" + request.context_id + ", " +
                                request.group_id + "): " + e.what());
    }
    TensorCell cell;
    for (const auto& tp : result.probs) {
      if (!(tp.prob >= 0.0)) {
        throw MalformedResponse("cell (" + request.context_id + ", " +
                                request.group_id + "): candidate '" + tp.word +
                                "' has negative probability");
      }
      cell.probs[tp.word] = tp.prob;
    }
    cell.warnings = result.warnings;

    std::lock_guard<std::mutex> lock(writer_mutex);
    nlohmann::json line = {{"context_id", request.context_id},
                           {"group_id", request.group_id},
                           {"probs", cell.probs}};
    if (!cell.warnings.empty()) {
      line["warnings"] = cell.warnings;
    }
    cache << line.dump() << "\n";
    cache.flush();
    local_stats.warnings += cell.warnings.size();
    ++local_stats.queried;
    tensor.set_cell(c, g, std::move(cell));
  };

  auto worker = [&]() {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) {
        return;
      }
      try {
        run_cell(work[i].first, work[i].second);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const std::size_t num_workers = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(
                                   std::max(1, options.concurrency)),
                               work.size()));
  if (num_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(num_workers);
    for (std::size_t i = 0; i < num_workers; ++i) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) {
      t.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);  // partial cache kept for resume
  }

  tensor.meta().created = utc_timestamp();
  tensor.validate_complete(candidates);
  tensor.save(options.output_file);
  cache.close();
  std::filesystem::remove(partial_path);
  if (stats) *stats = local_stats;
  return tensor;
}

}  // namespace pvf
