#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nep/labels.hpp"

namespace nep {

struct Sentence {
  std::size_t index = 0;  // 0-based position within the document
  std::string text;

  bool operator==(const Sentence&) const = default;
};

// A contiguous block of sentences describing one named event.
// Both ends are inclusive.
struct Passage {
  std::size_t start = 0;
  std::size_t end = 0;
  EventLabel label = EventLabel::NoneOfAbove;

  bool operator==(const Passage&) const = default;
  std::size_t length() const { return end - start + 1; }
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;
  std::optional<std::vector<EventLabel>> gold_labels;
  std::optional<std::vector<Passage>> gold_passages;

  bool operator==(const Document&) const = default;
};

// Checks every type invariant: non-empty sentence text, contiguous indices,
// gold label length, gold passages tiling the full index range.
// Throws ContractError naming the document and the violated invariant.
void validate_document(const Document& doc);

// Throws ContractError when the passages do not tile 0..n_sentences-1
// (non-overlapping, contiguous, complete). `what` names the offender.
void validate_tiling(std::span<const Passage> passages, std::size_t n_sentences,
                     std::string_view what);

// JSONL corpus: one JSON document record per line, UTF-8, LF endings.
std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const Document> docs,
                 const std::filesystem::path& path);

std::string document_to_json_line(const Document& doc);
Document document_from_json_line(std::string_view line);

// Rule-based splitter: terminal punctuation (. ! ?) followed by whitespace
// and an uppercase letter, or end of text. Abbreviation entries carry their
// trailing period ("mr.") and suppress the split; matching is
// case-insensitive. Empty input yields an empty list.
std::vector<Sentence> split_sentences(std::string_view text,
                                      const std::set<std::string>& abbreviations);

}  // namespace nep
