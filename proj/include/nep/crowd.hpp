#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nep/corpus.hpp"
#include "nep/labels.hpp"

namespace nep {

// One row of an annotation batch: one worker's label for one sentence.
// duration_secs is the wall time of the whole HIT, repeated on each of its
// rows.
struct AnnotationRecord {
  std::string worker_id;
  std::string hit_id;
  std::string doc_id;
  std::size_t sentence_index = 0;
  EventLabel label = EventLabel::NoneOfAbove;
  double duration_secs = 0.0;
  std::string submitted_at;
};

struct WorkerProfile {
  std::string worker_id;
  std::uint64_t accepted = 0;
  std::uint64_t total = 0;  // total = 0 means a new worker, rate counts as 1
  std::vector<double> durations;  // per-HIT, seconds
};

using WorkerProfiles = std::map<std::string, WorkerProfile>;

struct VoteScore {
  std::array<double, kLabelCount> scores{};
  EventLabel top_label = EventLabel::NoneOfAbove;
};

enum class RejectionReason { Incomplete, Fast, Random };

std::string_view rejection_reason_name(RejectionReason reason);

struct RejectedHit {
  std::string hit_id;
  std::string worker_id;
  RejectionReason reason = RejectionReason::Incomplete;
};

struct CrowdThresholds {
  std::size_t expected_per_hit = 10;
  double duration_floor_secs = 5.0;
  double fast_z_threshold = -2.0;
  double random_agreement_floor = 0.2;
};

struct FilterResult {
  std::vector<AnnotationRecord> kept;  // original order
  std::vector<RejectedHit> rejected;   // order of first appearance
};

// Rejects whole HITs, checking in order: INCOMPLETE (fewer rows than
// expected), FAST (HIT duration under the absolute floor, or z-scored
// against the worker's duration history when it has >= 3 entries), RANDOM
// (agreement with the leave-this-worker-out unweighted consensus over
// INCOMPLETE/FAST survivors falls below the floor; sentences nobody else
// labeled do not count).
FilterResult filter_bad_hits(std::span<const AnnotationRecord> records,
                             const WorkerProfiles& profiles,
                             const CrowdThresholds& thresholds);

// Vote count per label; top score wins, ties go to canonical label order.
VoteScore score_unweighted(std::span<const AnnotationRecord> records);

// acceptance_rate * exp(-z^2 / 2); sigma floored at 1 s, time factor 1 when
// the history holds fewer than 3 durations.
double worker_weight(const WorkerProfile& profile, double this_duration);

// Like score_unweighted but each vote counts worker_weight; workers absent
// from `profiles` weigh 1.
VoteScore score_weighted(std::span<const AnnotationRecord> records,
                         const WorkerProfiles& profiles);

struct RatingMatrix {
  std::vector<std::vector<std::uint32_t>> rows;  // [subject][category]
};

// Fleiss kappa; returns exactly 1 when every subject's ratings agree,
// including the degenerate single-category case.
double fleiss_kappa(const RatingMatrix& matrix);

struct RatingMatrixSummary {
  RatingMatrix matrix;
  std::uint32_t raters = 0;      // n shared by the rows that were kept
  std::size_t subjects = 0;      // rows kept
  std::size_t skipped = 0;       // sentences with a different rater count
};

// Rows are sentences, categories the 11 labels. Rater counts vary in real
// batches, so only sentences with the most common count are kept (ties
// favor the larger count).
RatingMatrixSummary build_rating_matrix(
    std::span<const AnnotationRecord> records);

enum class ScoreMode { Unweighted, Weighted };

std::optional<ScoreMode> parse_score_mode(std::string_view text);
std::string_view score_mode_name(ScoreMode mode);

struct GoldExport {
  std::vector<Document> documents;
  // Per document, per sentence: the vote score array behind the label.
  std::vector<std::vector<std::array<double, kLabelCount>>> scores;
};

// Documents from `base` that appear in `records` get gold labels from the
// selected per-sentence scorer and gold passages from contiguous runs. A
// partially covered document is an error; documents with no records are
// left out.
GoldExport export_gold(std::span<const Document> base,
                       std::span<const AnnotationRecord> records,
                       const WorkerProfiles& profiles, ScoreMode mode);

std::vector<AnnotationRecord> parse_annotations_csv(std::string_view text,
                                                    std::string_view name);
std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path);

WorkerProfiles parse_worker_profiles_csv(std::string_view text,
                                         std::string_view name);
WorkerProfiles load_worker_profiles(const std::filesystem::path& path);

// Appends each HIT's duration in `records` to its worker's history,
// creating blank profiles for unseen workers. Call before filtering or
// weighting so the batch itself supplies the duration history.
void attach_batch_durations(WorkerProfiles& profiles,
                            std::span<const AnnotationRecord> records);

void save_rejections(const std::filesystem::path& path,
                     std::span<const RejectedHit> rejected);

}  // namespace nep
