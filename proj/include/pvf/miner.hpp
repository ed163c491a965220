// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file miner.hpp
 * @brief Mines the context-template distribution from a raw text corpus.
 *
 * Pipeline per document: sentence split -> word-list matching -> filters ->
 * skeletonization -> tally.  A sentence survives filtering when
 *   i)   it contains at least one group word and one attribute word,
 *   ii)  it contains no word from the schema's exclusion list,
 *   iii) exactly one group-word occurrence is present, and at least one
 *        attribute hit is linked to it by the heuristic below.
 *
 * Linkage heuristic (a stand-in for full coreference resolution, which this
 * toolkit deliberately avoids): an attribute hit is linked to the group hit
 * when it occurs after it in the sentence, is not introduced as a separate
 * referent by an immediately preceding determiner (the/a/an), and no other
 * schema word or person-denoting noun from a small closed list stands
 * between the two. In y-at-end mode an attribute word directly preceding the
 * group word (adjectival use, "the white captain") also links, and is
 * preferred.
 *
 * Skeletons replace the designated hits with [X] and [Y], normalize
 * whitespace, and truncate right after [Y]; y-at-end mode rewrites
 * adjectival sentences to "The [X], who <predicate>, is [Y]" so that the
 * prediction slot is always terminal.
 *
 * Documents may be processed in parallel; tallies merge by count addition
 * and the final sort restores a canonical order, so the resulting ContextSet
 * is byte-stable regardless of document processing order.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvf/contexts.hpp"
#include "pvf/schema.hpp"

namespace pvf {

struct CorpusDocument {
  std::string doc_id;
  std::string text;
};

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // past-the-end byte offset
};

struct XHit {
  std::string word;  // lowercase
  Span span;
  std::string group_id;
};

struct YHit {
  std::string word;  // lowercase
  Span span;
  std::string category_id;
};

struct SentenceCandidate {
  std::string doc_id;
  std::string sentence;
  std::vector<XHit> x_hits;
  std::vector<YHit> y_hits;
};

/// A candidate that passed all filters, with its designated slot pair.
struct FilteredCandidate {
  SentenceCandidate candidate;
  XHit x;
  YHit y;
};

enum class RejectReason { ExclusionWord, AmbiguousX, NoLinkedY };

struct MiningStats {
  std::uint64_t documents = 0;
  std::uint64_t sentences = 0;
  std::uint64_t candidates = 0;  // sentences with >= 1 X and >= 1 Y hit
  std::uint64_t rejected_exclusion = 0;
  std::uint64_t rejected_ambiguous_x = 0;
  std::uint64_t rejected_no_linked_y = 0;
  std::uint64_t accepted = 0;

  void merge(const MiningStats& other);
};

/// Deterministic segmentation on . ! ? followed by whitespace and an
/// uppercase letter, with a fixed abbreviation stop-list for periods.
std::vector<std::string> split_sentences(const std::string& text);

/// Case-insensitive word-boundary matching. Returns a candidate only when
/// the sentence has at least one X and one Y hit.
std::optional<SentenceCandidate> match_candidate(const std::string& sentence,
                                                 const WordSchema& schema,
                                                 const std::string& doc_id = "");

/// Applies exclusion, ambiguity, and linkage filters; designates the slot
/// pair. On rejection, *why (if given) holds the reason.
std::optional<FilteredCandidate> filter_candidate(
    const SentenceCandidate& candidate, const WordSchema& schema,
    SlotOrder mode, RejectReason* why = nullptr);

/// Skeleton with count 1. Throws SlotCollision if the spans overlap.
ContextTemplate skeletonize(const FilteredCandidate& filtered, SlotOrder mode);

/// Merges equal skeletons and fixes the canonical order.
ContextSet tally(const std::vector<ContextTemplate>& templates,
                 SlotOrder mode);

/// Full pipeline over a set of documents (parallelized when OpenMP is
/// available; output independent of thread count).
ContextSet mine_corpus(const std::vector<CorpusDocument>& documents,
                       const WordSchema& schema, SlotOrder mode,
                       MiningStats* stats = nullptr);

/// JSON-lines corpus: one {"id": ..., "text": ...} object per line.
std::vector<CorpusDocument> load_corpus_jsonl(
    const std::filesystem::path& path);

/// Uniformly samples (without replacement) at most n documents, preserving
/// file order; deterministic for a fixed seed.
std::vector<CorpusDocument> sample_documents(std::vector<CorpusDocument> docs,
                                             std::size_t n,
                                             std::uint64_t seed);

}  // namespace pvf
