#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nep/corpus.hpp"
#include "nep/labels.hpp"

namespace nep {

// Desk-scale corpus generator: documents are sequences of single-event
// passages whose sentences mix words from disjoint per-label vocabularies
// with shared function words, then per-sentence labels are flipped with a
// fixed probability.
struct SyntheticSpec {
  std::size_t n_docs = 100;
  std::vector<EventLabel> labels;  // empty means the first four canonical
  std::size_t vocab_per_label = 40;
  std::pair<std::size_t, std::size_t> passage_length_range{2, 4};
  std::pair<std::size_t, std::size_t> passages_per_doc_range{2, 5};
  std::pair<std::size_t, std::size_t> sentence_length_range{5, 9};
  double content_density = 0.45;  // chance a token is a label word
  double label_noise = 0.0;
  // Consecutive passages carry different labels so every gold boundary is
  // recoverable from the labels; disable for plain uniform draws.
  bool adjacent_distinct = true;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<Document> documents;  // gold_labels carry the flipped labels
  std::vector<std::vector<EventLabel>> pre_noise_labels;  // parallel
};

// The shared function words; sentence generation draws filler from this
// list, and classifier harnesses pass the same list as stopwords.
std::span<const std::string_view> synthetic_noise_words();

// The i-th content word of a label, e.g. "armedclashesw3". Underscore-free
// so each word survives tokenization as a single token.
std::string synthetic_label_word(EventLabel label, std::size_t index);

void validate_spec(const SyntheticSpec& spec);

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// JSON spec file; every field optional, unknown keys rejected.
SyntheticSpec parse_synthetic_spec(std::string_view text,
                                   std::string_view name);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

}  // namespace nep
