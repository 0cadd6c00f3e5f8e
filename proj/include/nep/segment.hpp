#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nep/classify.hpp"
#include "nep/corpus.hpp"
#include "nep/labels.hpp"

namespace nep {

// A sentence-label sequence; `boundaries` holds indices n where a passage
// ends at sentence n. The last index (size - 1) is always a boundary.
struct LabeledSequence {
  std::vector<EventLabel> labels;
  std::optional<std::set<std::size_t>> boundaries;
};

enum class SegmentMode { Baseline, Hmm };

std::optional<SegmentMode> parse_segment_mode(std::string_view text);
std::string_view segment_mode_name(SegmentMode mode);

// Conditional boundary frequencies keyed by label windows of length 1..L+1
// ending at the current sentence. Unseen windows back off to the longest
// observed suffix, bottoming out at the global boundary rate.
class BoundaryContextTable {
 public:
  struct Entry {
    std::vector<EventLabel> context;
    std::uint64_t boundary = 0;
    std::uint64_t total = 0;
  };

  BoundaryContextTable() = default;

  static BoundaryContextTable fit(std::span<const LabeledSequence> sequences,
                                  std::uint32_t context_length);

  std::uint32_t context_length() const { return context_length_; }
  double global_boundary_rate() const { return global_rate_; }

  // Counts for an exact window, without backoff.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> lookup(
      std::span<const EventLabel> context) const;

  // Estimated boundary probability for the window, with suffix backoff.
  double boundary_prob(std::span<const EventLabel> context) const;

  // All windows in deterministic order: shorter first, then by the packed
  // label key.
  std::vector<Entry> entries() const;

  std::string to_json() const;
  static BoundaryContextTable from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BoundaryContextTable load(const std::filesystem::path& path);

 private:
  // Labels pack into 4 bits each, so windows are capped at 16 labels.
  static constexpr std::uint32_t kMaxContextLength = 15;

  std::uint32_t context_length_ = 0;
  double global_rate_ = 0.0;
  std::uint64_t boundary_events_ = 0;
  std::uint64_t total_events_ = 0;
  // tables_[m - 1] maps packed windows of length m to (boundary, total).
  std::vector<std::vector<std::pair<std::uint64_t, std::uint64_t>>> cells_;
  std::vector<std::vector<std::uint64_t>> keys_;  // sorted, parallel to cells_
};

// Majority label of a sentence span; ties go to the label appearing
// earliest in the span, then to canonical order.
EventLabel majority_label(std::span<const EventLabel> labels,
                          std::size_t begin, std::size_t end);

// Cuts exactly where adjacent sentence labels differ.
std::vector<Passage> baseline_segment(std::span<const EventLabel> labels);

// Maximum-likelihood segmentation under the boundary table, subject to a
// minimum passage length. A min_len longer than the sequence is an error:
// no tiling can satisfy it.
std::vector<Passage> viterbi_segment(std::span<const EventLabel> labels,
                                     const BoundaryContextTable& table,
                                     std::size_t min_len);

// Sum of per-sentence log boundary/continuation probabilities for a given
// boundary set, as scored by viterbi_segment.
double segmentation_log_prob(std::span<const EventLabel> labels,
                             const std::set<std::size_t>& boundaries,
                             const BoundaryContextTable& table);

// Gold passages of a document as a training sequence.
LabeledSequence sequence_from_document(const Document& doc);

struct SegmentedDocument {
  std::string doc_id;
  std::vector<EventLabel> sentence_labels;
  std::vector<Passage> passages;
};

// Classify every sentence, then aggregate. `table` may be null only in
// baseline mode.
SegmentedDocument segment_document(const EnsembleModel& model,
                                   const BoundaryContextTable* table,
                                   const Document& doc, SegmentMode mode,
                                   std::size_t min_len);

}  // namespace nep
