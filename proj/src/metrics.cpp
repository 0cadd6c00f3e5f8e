#include "nep/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nep/errors.hpp"

namespace nep {

PRF1Report prf1(std::span<const EventLabel> pred,
                std::span<const EventLabel> gold) {
  if (pred.size() != gold.size()) {
    throw ContractError("prf1: prediction and gold lengths differ");
  }
  if (pred.empty()) {
    throw ContractError("prf1: empty input");
  }

  std::array<std::uint64_t, kLabelCount> tp{};
  std::array<std::uint64_t, kLabelCount> fp{};
  std::array<std::uint64_t, kLabelCount> fn{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = label_index(pred[i]);
    const auto g = label_index(gold[i]);
    if (p == g) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }

  PRF1Report report;
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    ClassMetrics& m = report.per_class[c];
    m.support = tp[c] + fn[c];
    const std::uint64_t predicted = tp[c] + fp[c];
    m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp[c]) / predicted;
    m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp[c]) / m.support;
    m.f1 = m.precision + m.recall == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    report.weighted_precision += m.precision * static_cast<double>(m.support);
    report.weighted_recall += m.recall * static_cast<double>(m.support);
    report.weighted_f1 += m.f1 * static_cast<double>(m.support);
  }
  const auto total = static_cast<double>(gold.size());
  report.weighted_precision /= total;
  report.weighted_recall /= total;
  report.weighted_f1 /= total;
  return report;
}

double ndcg(const RankedLabels& ranked, std::size_t cutoff) {
  if (cutoff == 0) {
    throw ContractError("ndcg: cutoff must be >= 1");
  }
  std::array<bool, kLabelCount> seen{};
  for (EventLabel label : ranked.labels) {
    if (seen[label_index(label)]) {
      throw ContractError("ndcg: duplicate label in ranking");
    }
    seen[label_index(label)] = true;
  }
  for (double gain : ranked.gains) {
    if (gain < 0.0) {
      throw ContractError("ndcg: gains must be non-negative");
    }
  }

  double dcg = 0.0;
  const std::size_t depth = std::min(cutoff, ranked.labels.size());
  for (std::size_t i = 0; i < depth; ++i) {
    dcg += ranked.gains[label_index(ranked.labels[i])] /
           std::log2(static_cast<double>(i) + 2.0);
  }

  // The ideal ranking covers every label; zero-gain tail entries add
  // nothing, so the set difference with `ranked.labels` is immaterial.
  auto order = all_labels();
  std::stable_sort(order.begin(), order.end(),
                   [&ranked](EventLabel a, EventLabel b) {
                     return ranked.gains[label_index(a)] >
                            ranked.gains[label_index(b)];
                   });
  double ideal_dcg = 0.0;
  const std::size_t ideal_depth = std::min<std::size_t>(cutoff, kLabelCount);
  for (std::size_t i = 0; i < ideal_depth; ++i) {
    ideal_dcg += ranked.gains[label_index(order[i])] /
                 std::log2(static_cast<double>(i) + 2.0);
  }
  if (ideal_dcg == 0.0) return 1.0;
  return dcg / ideal_dcg;
}

void BCubedTotals::add(std::span<const Passage> pred,
                       std::span<const Passage> gold,
                       std::size_t n_sentences) {
  validate_tiling(pred, n_sentences, "bcubed predicted passages");
  validate_tiling(gold, n_sentences, "bcubed gold passages");

  std::size_t pi = 0;
  std::size_t gi = 0;
  for (std::size_t s = 0; s < n_sentences; ++s) {
    while (pred[pi].end < s) ++pi;
    while (gold[gi].end < s) ++gi;
    const std::size_t lo = std::max(pred[pi].start, gold[gi].start);
    const std::size_t hi = std::min(pred[pi].end, gold[gi].end);
    const auto overlap = static_cast<double>(hi - lo + 1);
    precision_sum += overlap / static_cast<double>(pred[pi].length());
    recall_sum += overlap / static_cast<double>(gold[gi].length());
  }
  sentences += n_sentences;
}

BCubedScore BCubedTotals::score() const {
  if (sentences == 0) {
    throw ContractError("bcubed: no sentences accumulated");
  }
  BCubedScore out;
  out.precision = precision_sum / static_cast<double>(sentences);
  out.recall = recall_sum / static_cast<double>(sentences);
  out.f1 = out.precision + out.recall == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

BCubedScore bcubed(std::span<const Passage> pred,
                   std::span<const Passage> gold, std::size_t n_sentences) {
  BCubedTotals totals;
  totals.add(pred, gold, n_sentences);
  return totals.score();
}

}  // namespace nep
