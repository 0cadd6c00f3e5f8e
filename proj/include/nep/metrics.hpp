#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nep/corpus.hpp"
#include "nep/labels.hpp"

namespace nep {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct PRF1Report {
  std::array<ClassMetrics, kLabelCount> per_class{};
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

// One-vs-rest precision/recall/F1 per label; zero denominators score 0.
// The weighted averages use gold support.
PRF1Report prf1(std::span<const EventLabel> pred,
                std::span<const EventLabel> gold);

struct RankedLabels {
  std::vector<EventLabel> labels;  // descending score, no duplicates
  std::array<double, kLabelCount> gains{};
};

// Discounted cumulative gain(i) = gain / log2(i + 1), normalized by the
// ideal ordering (gain descending, ties canonical). Returns 1 when the
// ideal DCG is 0.
double ndcg(const RankedLabels& ranked, std::size_t cutoff);

struct BCubedScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pools per-sentence overlap ratios, so corpus-level scores weight every
// sentence equally regardless of document length.
struct BCubedTotals {
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  std::size_t sentences = 0;

  // Both passage lists must tile 0..n_sentences-1. Clusters are spans;
  // passage labels play no part.
  void add(std::span<const Passage> pred, std::span<const Passage> gold,
           std::size_t n_sentences);
  BCubedScore score() const;
};

BCubedScore bcubed(std::span<const Passage> pred,
                   std::span<const Passage> gold, std::size_t n_sentences);

}  // namespace nep
