#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nep/corpus.hpp"

namespace nep {

// A salient 1..3-gram of lowercased tokens with its ranking score.
struct Phrase {
  std::vector<std::string> tokens;
  double score = 0.0;

  std::string joined() const;
  bool operator==(const Phrase&) const = default;
};

// Closed word lists standing in for a statistical NER: person and place
// names force a phrase out, organization markers keep it in.
struct Gazetteer {
  std::set<std::string> person_names;
  std::set<std::string> place_names;
  std::set<std::string> org_markers;
};

// Dense feature-string -> index map. Also used to hold per-token document
// frequencies of a training corpus (for TF-IDF).
struct Vocabulary {
  std::vector<std::string> features;             // index -> feature string
  std::map<std::string, std::uint32_t, std::less<>> index;
  std::vector<std::uint32_t> doc_freq;           // per-entry document count
  std::uint64_t document_count = 0;

  std::size_t size() const { return features.size(); }
  std::optional<std::uint32_t> find(std::string_view feature) const;
};

// Sparse bag of feature counts; only strictly positive counts are stored.
struct FeatureVector {
  std::map<std::uint32_t, std::uint32_t> counts;

  bool operator==(const FeatureVector&) const = default;
};

// Per-token document frequencies over a corpus, one vocabulary entry per
// distinct token.
Vocabulary build_token_stats(std::span<const Document> docs);

// ln((D+1)/(df+1)) + 1 against the given corpus stats.
double inverse_doc_freq(const Vocabulary& corpus_stats, std::string_view token);

// Top-k contiguous 1..3-grams of the document ranked by the summed TF-IDF of
// their constituent tokens. Candidates may not start or end with a stopword.
// Ties break by earlier first occurrence, then lexicographically.
std::vector<Phrase> extract_keyphrases(const Document& doc,
                                       const Vocabulary& corpus_stats,
                                       std::size_t k,
                                       const std::set<std::string>& stopwords);

// Drops phrases containing a person or place name unless an organization
// marker token is also present. Order is preserved.
std::vector<Phrase> filter_entities(std::vector<Phrase> phrases,
                                    const Gazetteer& gazetteer);

// Lexicon entries whose base or inflected forms (-s/-es/-ed/-ing, with
// consonant-doubling and final-e restoration) occur in the training
// sentences.
std::set<std::string> collect_action_verbs(
    std::span<const Document> training_docs,
    const std::set<std::string>& verb_lexicon);

// One entry per distinct feature string, indices assigned in sorted order.
Vocabulary build_vocabulary(const std::set<std::string>& phrases,
                            const std::set<std::string>& verbs);

// Counts vocabulary features in the sentence; multi-word features match as
// contiguous token runs and overlapping matches all count.
FeatureVector vectorize(const Sentence& sentence, const Vocabulary& vocab);

}  // namespace nep
