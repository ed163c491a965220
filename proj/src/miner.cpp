// SPDX-License-Identifier: Apache-2.0
#include "pvf/miner.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace pvf {

void MiningStats::merge(const MiningStats& other) {
  documents += other.documents;
  sentences += other.sentences;
  candidates += other.candidates;
  rejected_exclusion += other.rejected_exclusion;
  rejected_ambiguous_x += other.rejected_ambiguous_x;
  rejected_no_linked_y += other.rejected_no_linked_y;
  accepted += other.accepted;
}

namespace {

bool is_word_char(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '\'';
}

struct Token {
  std::string lower;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i]) ||
        text[i] == '\'') {  // tokens never start with an apostrophe
      ++i;
      continue;
    }
    std::size_t begin = i;
    while (i < text.size() && is_word_char(text[i])) {
      ++i;
    }
    std::size_t end = i;
    // trim trailing apostrophes (closing single quotes)
    while (end > begin && text[end - 1] == '\'') {
      --end;
    }
    Token t;
    t.begin = begin;
    t.end = end;
    t.lower.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      t.lower.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
    }
    if (!t.lower.empty()) {
      tokens.push_back(std::move(t));
    }
  }
  return tokens;
}

// Abbreviations that keep a following period from ending the sentence.
const std::unordered_set<std::string>& abbreviation_stoplist() {
  static const std::unordered_set<std::string> list = {
      "dr",   "mr",  "mrs", "ms",  "prof", "st",  "jr",   "sr",
      "vs",   "etc", "eg",  "ie",  "no",   "fig", "al",   "inc",
      "ltd",  "co",  "dept", "approx", "est", "gen", "gov", "capt",
      "sgt",  "lt",  "col", "maj", "rev",  "hon", "ave",  "blvd"};
  return list;
}

// Person-denoting nouns that break the linkage window. Kept outside the
// schema: schema words have their own blocking rule.
const std::unordered_set<std::string>& person_noun_list() {
  static const std::unordered_set<std::string> list = {
      "person",   "people",    "friend",    "friends",  "neighbor",
      "neighbors", "colleague", "colleagues", "stranger", "strangers",
      "child",    "children",  "kid",       "kids",     "family",
      "couple",   "crowd",     "patient",   "patients", "client",
      "clients",  "customer",  "customers", "student",  "students",
      "guest",    "guests",    "visitor",   "visitors", "audience",
      "witness",  "witnesses", "official",  "officials"};
  return list;
}

const std::unordered_set<std::string>& determiner_list() {
  static const std::unordered_set<std::string> list = {"the", "a", "an"};
  return list;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) {
      out.push_back(' ');
    }
    in_space = false;
    out.push_back(c);
  }
  return out;
}

bool is_clause_boundary(char c) {
  return c == ',' || c == ';' || c == ':' || c == '.' || c == '!' || c == '?';
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  std::size_t i = 0;
  auto flush = [&](std::size_t end) {
    std::string s = trim(text.substr(start, end - start));
    if (!s.empty()) {
      sentences.push_back(std::move(s));
    }
    start = end;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    // consume a run of terminal punctuation ("?!", "...")
    std::size_t punct_end = i;
    while (punct_end < text.size() &&
           (text[punct_end] == '.' || text[punct_end] == '!' ||
            text[punct_end] == '?')) {
      ++punct_end;
    }
    // boundary only when whitespace + uppercase follows
    std::size_t after = punct_end;
    while (after < text.size() &&
           std::isspace(static_cast<unsigned char>(text[after]))) {
      ++after;
    }
    const bool ws_then_upper =
        after > punct_end && after < text.size() &&
        std::isupper(static_cast<unsigned char>(text[after]));
    bool boundary = ws_then_upper;
    if (boundary && c == '.' && punct_end == i + 1) {
      // single period: check the word before it against the stop-list
      std::size_t wend = i;
      std::size_t wbegin = wend;
      while (wbegin > start && is_word_char(text[wbegin - 1])) {
        --wbegin;
      }
      if (wend > wbegin) {
        std::string word;
        for (std::size_t k = wbegin; k < wend; ++k) {
          word.push_back(static_cast<char>(
              std::tolower(static_cast<unsigned char>(text[k]))));
        }
        // single letters are initials ("J. Smith")
        if (word.size() == 1 || abbreviation_stoplist().contains(word)) {
          boundary = false;
        }
      }
    }
    if (boundary) {
      flush(punct_end);
      i = after;
    } else {
      i = punct_end;
    }
  }
  flush(text.size());
  return sentences;
}

std::optional<SentenceCandidate> match_candidate(const std::string& sentence,
                                                 const WordSchema& schema,
                                                 const std::string& doc_id) {
  SentenceCandidate cand;
  cand.doc_id = doc_id;
  cand.sentence = sentence;
  for (const auto& token : tokenize(sentence)) {
    if (const GroupSpec* g = schema.group_for_word(token.lower)) {
      cand.x_hits.push_back({token.lower, {token.begin, token.end}, g->id});
    } else if (const CategorySpec* c = schema.category_for_word(token.lower)) {
      cand.y_hits.push_back({token.lower, {token.begin, token.end}, c->id});
    }
  }
  if (cand.x_hits.empty() || cand.y_hits.empty()) {
    return std::nullopt;
  }
  return cand;
}

namespace {

// True when a schema word or closed-list person noun occurs strictly between
// the two offsets.
bool window_blocked(const std::vector<Token>& tokens, const WordSchema& schema,
                    std::size_t from, std::size_t to) {
  for (const auto& t : tokens) {
    if (t.begin < from || t.end > to) continue;
    if (schema.group_for_word(t.lower) || schema.category_for_word(t.lower) ||
        person_noun_list().contains(t.lower)) {
      return true;
    }
  }
  return false;
}

bool det_preceded(const std::vector<Token>& tokens, const YHit& y) {
  const Token* prev = nullptr;
  for (const auto& t : tokens) {
    if (t.begin >= y.span.begin) break;
    prev = &t;
  }
  return prev != nullptr && prev->end <= y.span.begin &&
         determiner_list().contains(prev->lower);
}

// Adjectival use: the attribute token directly precedes the group token.
bool immediately_before(const std::vector<Token>& tokens, const YHit& y,
                        const XHit& x) {
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].begin == y.span.begin && tokens[i + 1].begin == x.span.begin) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<FilteredCandidate> filter_candidate(
    const SentenceCandidate& candidate, const WordSchema& schema,
    SlotOrder mode, RejectReason* why) {
  const auto tokens = tokenize(candidate.sentence);

  // (ii) attribute-revealing exclusion words
  for (const auto& t : tokens) {
    if (schema.is_exclusion(t.lower)) {
      if (why) *why = RejectReason::ExclusionWord;
      return std::nullopt;
    }
  }

  // ambiguous subject: any second group-word occurrence
  if (candidate.x_hits.size() != 1) {
    if (why) *why = RejectReason::AmbiguousX;
    return std::nullopt;
  }
  const XHit& x = candidate.x_hits.front();

  // (iii) linkage
  const YHit* adjectival = nullptr;
  const YHit* following = nullptr;
  for (const auto& y : candidate.y_hits) {
    if (mode == SlotOrder::YatEnd && !adjectival &&
        immediately_before(tokens, y, x)) {
      adjectival = &y;
      continue;
    }
    if (following || y.span.begin < x.span.end) continue;
    if (det_preceded(tokens, y)) continue;
    if (window_blocked(tokens, schema, x.span.end, y.span.begin)) continue;
    following = &y;
  }

  const YHit* designated =
      (mode == SlotOrder::YatEnd && adjectival) ? adjectival : following;
  if (!designated) {
    if (why) *why = RejectReason::NoLinkedY;
    return std::nullopt;
  }
  return FilteredCandidate{candidate, x, *designated};
}

ContextTemplate skeletonize(const FilteredCandidate& filtered,
                            SlotOrder mode) {
  const auto& s = filtered.candidate.sentence;
  const Span xs = filtered.x.span;
  const Span ys = filtered.y.span;
  if (xs.begin < ys.end && ys.begin < xs.end) {
    throw SlotCollision("slot spans overlap in: " + s);
  }

  std::string skeleton;
  if (ys.begin >= xs.end) {
    // prefix skeleton, truncated right after [Y]
    skeleton = s.substr(0, xs.begin) + "[X]" +
               s.substr(xs.end, ys.begin - xs.end) + "[Y]";
  } else {
    // adjectival (y-at-end mode): reorder so the prediction slot is terminal
    std::size_t p = xs.end;
    while (p < s.size() &&
           (std::isspace(static_cast<unsigned char>(s[p])) || s[p] == ',')) {
      ++p;
    }
    std::size_t q = p;
    while (q < s.size() && !is_clause_boundary(s[q])) {
      ++q;
    }
    const std::string predicate = collapse_whitespace(trim(s.substr(p, q - p)));
    if (predicate.empty()) {
      skeleton = "The [X] is [Y]";
    } else {
      const auto first_word = predicate.substr(0, predicate.find(' '));
      const bool relative = first_word == "who" || first_word == "that" ||
                            first_word == "which";
      skeleton = relative ? "The [X], " + predicate + ", is [Y]"
                          : "The [X], who " + predicate + ", is [Y]";
    }
  }
  ContextTemplate out;
  out.skeleton = collapse_whitespace(trim(skeleton));
  out.slot_order = mode;
  out.count = 1;
  validate_skeleton(out.skeleton);
  return out;
}

ContextSet tally(const std::vector<ContextTemplate>& templates,
                 SlotOrder mode) {
  return ContextSet(templates, mode);
}

namespace {

void mine_document(const CorpusDocument& doc, const WordSchema& schema,
                   SlotOrder mode, std::map<std::string, std::uint64_t>& tally,
                   MiningStats& stats) {
  ++stats.documents;
  for (const auto& sentence : split_sentences(doc.text)) {
    ++stats.sentences;
    auto cand = match_candidate(sentence, schema, doc.doc_id);
    if (!cand) continue;
    ++stats.candidates;
    RejectReason why;
    auto filtered = filter_candidate(*cand, schema, mode, &why);
    if (!filtered) {
      switch (why) {
        case RejectReason::ExclusionWord: ++stats.rejected_exclusion; break;
        case RejectReason::AmbiguousX: ++stats.rejected_ambiguous_x; break;
        case RejectReason::NoLinkedY: ++stats.rejected_no_linked_y; break;
      }
      continue;
    }
    ++stats.accepted;
    ++tally[skeletonize(*filtered, mode).skeleton];
  }
}

}  // namespace

ContextSet mine_corpus(const std::vector<CorpusDocument>& documents,
                       const WordSchema& schema, SlotOrder mode,
                       MiningStats* stats) {
  std::map<std::string, std::uint64_t> merged;
  MiningStats totals;

#ifdef _OPENMP
  std::exception_ptr first_error = nullptr;
#pragma omp parallel
  {
    std::map<std::string, std::uint64_t> local;
    MiningStats local_stats;
#pragma omp for schedule(dynamic, 16) nowait
    for (std::size_t i = 0; i < documents.size(); ++i) {
      try {
        mine_document(documents[i], schema, mode, local, local_stats);
      } catch (...) {
#pragma omp critical(pvf_miner_error)
        if (!first_error) first_error = std::current_exception();
      }
    }
#pragma omp critical(pvf_miner_merge)
    {
      for (const auto& [skeleton, count] : local) {
        merged[skeleton] += count;
      }
      totals.merge(local_stats);
    }
  }
  if (first_error) std::rethrow_exception(first_error);
#else
  for (const auto& doc : documents) {
    mine_document(doc, schema, mode, merged, totals);
  }
#endif

  if (stats) *stats = totals;

  std::vector<ContextTemplate> templates;
  templates.reserve(merged.size());
  for (const auto& [skeleton, count] : merged) {
    templates.push_back(ContextTemplate{skeleton, mode, count});
  }
  return ContextSet(std::move(templates), mode);
}

std::vector<CorpusDocument> load_corpus_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read corpus file: " + path.string());
  }
  std::vector<CorpusDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    CorpusDocument doc;
    try {
      auto j = nlohmann::json::parse(line);
      doc.doc_id = j.at("id").get<std::string>();
      doc.text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("corpus line " + std::to_string(lineno) + ": " +
                        e.what());
    }
    if (doc.text.empty()) {
      throw SchemaError("corpus line " + std::to_string(lineno) +
                        ": empty text");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<CorpusDocument> sample_documents(std::vector<CorpusDocument> docs,
                                             std::size_t n,
                                             std::uint64_t seed) {
  if (docs.size() <= n) {
    return docs;
  }
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<CorpusDocument> out;
  out.reserve(n);
  for (std::size_t idx : order) {
    out.push_back(std::move(docs[idx]));
  }
  return out;
}

}  // namespace pvf
