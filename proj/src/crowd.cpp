#include "nep/crowd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "nep/errors.hpp"
#include "nep/segment.hpp"
#include "nep/text.hpp"

namespace nep {
namespace {

constexpr std::string_view kAnnotationHeader =
    "worker_id,hit_id,doc_id,sentence_index,label,duration_secs,submitted_at";
constexpr std::string_view kProfileHeader = "worker_id,accepted,total";
constexpr std::string_view kRejectionHeader = "hit_id,worker_id,reason_code";

// Plain comma split; none of the batch formats ever quote fields.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto piece = comma == std::string_view::npos
                           ? line.substr(start)
                           : line.substr(start, comma - start);
    fields.emplace_back(trim(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void csv_fail(std::string_view name, std::size_t line,
                           const std::string& message) {
  throw ContractError(std::string(name) + ":" + std::to_string(line) + ": " +
                      message);
}

std::uint64_t parse_uint(std::string_view text, std::string_view name,
                         std::size_t line, std::string_view what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    csv_fail(name, line,
             std::string(what) + " is not a non-negative integer: '" +
                 std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, std::string_view name,
                  std::size_t line, std::string_view what) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    csv_fail(name, line,
             std::string(what) + " is not a number: '" + std::string(text) +
                 "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path,
                      std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + std::string(what) + ": " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Lines with trailing \r (CRLF input) and blank lines are tolerated.
std::vector<std::pair<std::size_t, std::string_view>> content_lines(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    ++line_no;
    const std::size_t newline = text.find('\n', start);
    auto line = newline == std::string_view::npos
                    ? text.substr(start)
                    : text.substr(start, newline - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.emplace_back(line_no, line);
    if (newline == std::string_view::npos) break;
    start = newline + 1;
  }
  return lines;
}

EventLabel top_by_count(const std::array<double, kLabelCount>& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kLabelCount; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return label_from_index(best);
}

using SentenceKey = std::pair<std::string, std::size_t>;

}  // namespace

std::string_view rejection_reason_name(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::Incomplete:
      return "INCOMPLETE";
    case RejectionReason::Fast:
      return "FAST";
    case RejectionReason::Random:
      return "RANDOM";
  }
  return "INCOMPLETE";
}

FilterResult filter_bad_hits(std::span<const AnnotationRecord> records,
                             const WorkerProfiles& profiles,
                             const CrowdThresholds& thresholds) {
  struct HitGroup {
    std::string hit_id;
    std::string worker_id;
    std::vector<std::size_t> rows;
    std::optional<RejectionReason> verdict;
  };

  std::vector<HitGroup> groups;
  std::map<std::pair<std::string, std::string>, std::size_t> group_index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto key = std::make_pair(records[i].hit_id, records[i].worker_id);
    const auto [it, inserted] = group_index.emplace(key, groups.size());
    if (inserted) {
      groups.push_back(
          HitGroup{records[i].hit_id, records[i].worker_id, {}, {}});
    }
    groups[it->second].rows.push_back(i);
  }

  for (auto& group : groups) {
    if (group.rows.size() < thresholds.expected_per_hit) {
      group.verdict = RejectionReason::Incomplete;
    }
  }

  for (auto& group : groups) {
    if (group.verdict) continue;
    const double duration = records[group.rows.front()].duration_secs;
    if (duration < thresholds.duration_floor_secs) {
      group.verdict = RejectionReason::Fast;
      continue;
    }
    const auto it = profiles.find(group.worker_id);
    if (it == profiles.end() || it->second.durations.size() < 3) continue;
    const auto& history = it->second.durations;
    double mean = 0.0;
    for (double d : history) mean += d;
    mean /= static_cast<double>(history.size());
    double variance = 0.0;
    for (double d : history) variance += (d - mean) * (d - mean);
    variance /= static_cast<double>(history.size());
    const double sigma = std::max(std::sqrt(variance), 1.0);
    if ((duration - mean) / sigma < thresholds.fast_z_threshold) {
      group.verdict = RejectionReason::Fast;
    }
  }

  // Consensus pool for the randomness check: rows of every HIT that passed
  // the two checks above.
  std::map<SentenceKey, std::vector<std::pair<std::string_view, EventLabel>>>
      sentence_votes;
  for (const auto& group : groups) {
    if (group.verdict) continue;
    for (std::size_t row : group.rows) {
      const auto& r = records[row];
      sentence_votes[SentenceKey{r.doc_id, r.sentence_index}].emplace_back(
          group.worker_id, r.label);
    }
  }

  for (auto& group : groups) {
    if (group.verdict) continue;
    std::size_t considered = 0;
    std::size_t agreed = 0;
    for (std::size_t row : group.rows) {
      const auto& r = records[row];
      const auto& votes =
          sentence_votes.at(SentenceKey{r.doc_id, r.sentence_index});
      std::array<double, kLabelCount> counts{};
      bool any_other = false;
      for (const auto& [worker, label] : votes) {
        if (worker == group.worker_id) continue;
        any_other = true;
        counts[label_index(label)] += 1.0;
      }
      if (!any_other) continue;
      ++considered;
      if (top_by_count(counts) == r.label) ++agreed;
    }
    if (considered > 0 &&
        static_cast<double>(agreed) / static_cast<double>(considered) <
            thresholds.random_agreement_floor) {
      group.verdict = RejectionReason::Random;
    }
  }

  FilterResult result;
  std::vector<bool> row_kept(records.size(), false);
  for (const auto& group : groups) {
    if (group.verdict) {
      result.rejected.push_back(
          RejectedHit{group.hit_id, group.worker_id, *group.verdict});
    } else {
      for (std::size_t row : group.rows) row_kept[row] = true;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (row_kept[i]) result.kept.push_back(records[i]);
  }
  return result;
}

VoteScore score_unweighted(std::span<const AnnotationRecord> records) {
  if (records.empty()) {
    throw ContractError("score_unweighted: no records for sentence");
  }
  VoteScore score;
  for (const auto& record : records) {
    score.scores[label_index(record.label)] += 1.0;
  }
  score.top_label = top_by_count(score.scores);
  return score;
}

double worker_weight(const WorkerProfile& profile, double this_duration) {
  if (this_duration <= 0.0) {
    throw ContractError("worker_weight: duration must be > 0");
  }
  if (profile.accepted > profile.total) {
    throw ContractError("worker_weight: accepted exceeds total for worker '" +
                        profile.worker_id + "'");
  }
  const double rate =
      profile.total == 0
          ? 1.0
          : static_cast<double>(profile.accepted) / profile.total;
  if (profile.durations.size() < 3) return rate;
  double mean = 0.0;
  for (double d : profile.durations) mean += d;
  mean /= static_cast<double>(profile.durations.size());
  double variance = 0.0;
  for (double d : profile.durations) variance += (d - mean) * (d - mean);
  variance /= static_cast<double>(profile.durations.size());
  const double sigma = std::max(std::sqrt(variance), 1.0);
  const double z = (this_duration - mean) / sigma;
  return rate * std::exp(-z * z / 2.0);
}

VoteScore score_weighted(std::span<const AnnotationRecord> records,
                         const WorkerProfiles& profiles) {
  if (records.empty()) {
    throw ContractError("score_weighted: no records for sentence");
  }
  VoteScore score;
  for (const auto& record : records) {
    const auto it = profiles.find(record.worker_id);
    const double weight =
        it == profiles.end()
            ? 1.0
            : worker_weight(it->second, record.duration_secs);
    score.scores[label_index(record.label)] += weight;
  }
  score.top_label = top_by_count(score.scores);
  return score;
}

double fleiss_kappa(const RatingMatrix& matrix) {
  const auto& rows = matrix.rows;
  if (rows.empty()) {
    throw ContractError("fleiss_kappa: empty matrix");
  }
  const std::size_t k = rows.front().size();
  if (k < 2) {
    throw ContractError("fleiss_kappa: need at least 2 categories");
  }
  std::uint64_t n = 0;
  for (std::uint32_t cell : rows.front()) n += cell;
  if (n < 2) {
    throw ContractError("fleiss_kappa: need at least 2 raters per subject");
  }

  bool all_concentrated = true;
  std::vector<double> column_mass(k, 0.0);
  double agreement_sum = 0.0;
  for (const auto& row : rows) {
    if (row.size() != k) {
      throw ContractError("fleiss_kappa: ragged matrix rows");
    }
    std::uint64_t row_sum = 0;
    std::uint64_t square_sum = 0;
    bool concentrated = false;
    for (std::size_t j = 0; j < k; ++j) {
      row_sum += row[j];
      square_sum += static_cast<std::uint64_t>(row[j]) * row[j];
      if (row[j] == n) concentrated = true;
      column_mass[j] += row[j];
    }
    if (row_sum != n) {
      throw ContractError("fleiss_kappa: rows have unequal rater counts");
    }
    all_concentrated = all_concentrated && concentrated;
    agreement_sum += static_cast<double>(square_sum - n) /
                     (static_cast<double>(n) * (n - 1));
  }
  if (all_concentrated) return 1.0;

  const double subjects = static_cast<double>(rows.size());
  const double p_bar = agreement_sum / subjects;
  double p_expected = 0.0;
  for (double mass : column_mass) {
    const double p = mass / (subjects * static_cast<double>(n));
    p_expected += p * p;
  }
  return (p_bar - p_expected) / (1.0 - p_expected);
}

RatingMatrixSummary build_rating_matrix(
    std::span<const AnnotationRecord> records) {
  std::map<SentenceKey, std::vector<std::uint32_t>> by_sentence;
  for (const auto& record : records) {
    auto [it, inserted] = by_sentence.try_emplace(
        SentenceKey{record.doc_id, record.sentence_index},
        std::vector<std::uint32_t>(kLabelCount, 0));
    ++it->second[label_index(record.label)];
  }

  std::map<std::uint64_t, std::size_t> count_of_n;
  for (const auto& [key, row] : by_sentence) {
    std::uint64_t n = 0;
    for (std::uint32_t cell : row) n += cell;
    if (n >= 2) ++count_of_n[n];
  }

  RatingMatrixSummary summary;
  if (count_of_n.empty()) {
    summary.skipped = by_sentence.size();
    return summary;
  }
  std::uint64_t modal_n = 0;
  std::size_t modal_count = 0;
  for (const auto& [n, count] : count_of_n) {
    if (count >= modal_count) {  // >= so ties pick the larger n
      modal_n = n;
      modal_count = count;
    }
  }
  summary.raters = static_cast<std::uint32_t>(modal_n);
  for (const auto& [key, row] : by_sentence) {
    std::uint64_t n = 0;
    for (std::uint32_t cell : row) n += cell;
    if (n == modal_n) {
      summary.matrix.rows.push_back(row);
    } else {
      ++summary.skipped;
    }
  }
  summary.subjects = summary.matrix.rows.size();
  return summary;
}

std::optional<ScoreMode> parse_score_mode(std::string_view text) {
  const std::string lowered = to_lower(text);
  if (lowered == "unweighted") return ScoreMode::Unweighted;
  if (lowered == "weighted") return ScoreMode::Weighted;
  return std::nullopt;
}

std::string_view score_mode_name(ScoreMode mode) {
  return mode == ScoreMode::Unweighted ? "unweighted" : "weighted";
}

GoldExport export_gold(std::span<const Document> base,
                       std::span<const AnnotationRecord> records,
                       const WorkerProfiles& profiles, ScoreMode mode) {
  std::map<std::string, std::map<std::size_t, std::vector<AnnotationRecord>>>
      by_doc;
  for (const auto& record : records) {
    by_doc[record.doc_id][record.sentence_index].push_back(record);
  }

  std::set<std::string> known;
  for (const auto& doc : base) known.insert(doc.id);
  for (const auto& [doc_id, sentences] : by_doc) {
    (void)sentences;
    if (known.count(doc_id) == 0) {
      throw ContractError("annotations reference unknown document '" + doc_id +
                          "'");
    }
  }

  GoldExport out;
  for (const auto& doc : base) {
    const auto doc_it = by_doc.find(doc.id);
    if (doc_it == by_doc.end()) continue;
    const auto& sentences = doc_it->second;
    for (const auto& [index, recs] : sentences) {
      (void)recs;
      if (index >= doc.sentences.size()) {
        throw ContractError("document '" + doc.id +
                            "': annotation for missing sentence " +
                            std::to_string(index));
      }
    }

    std::vector<EventLabel> labels;
    std::vector<std::array<double, kLabelCount>> doc_scores;
    labels.reserve(doc.sentences.size());
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      const auto it = sentences.find(i);
      if (it == sentences.end()) {
        throw ContractError("document '" + doc.id + "': sentence " +
                            std::to_string(i) +
                            " has no surviving annotations");
      }
      const VoteScore score = mode == ScoreMode::Unweighted
                                  ? score_unweighted(it->second)
                                  : score_weighted(it->second, profiles);
      labels.push_back(score.top_label);
      doc_scores.push_back(score.scores);
    }

    Document gold = doc;
    gold.gold_labels = labels;
    gold.gold_passages = baseline_segment(labels);
    out.documents.push_back(std::move(gold));
    out.scores.push_back(std::move(doc_scores));
  }
  return out;
}

std::vector<AnnotationRecord> parse_annotations_csv(std::string_view text,
                                                    std::string_view name) {
  const auto lines = content_lines(text);
  if (lines.empty()) {
    throw ContractError(std::string(name) + ": empty annotations file");
  }
  if (trim(lines.front().second) != kAnnotationHeader) {
    csv_fail(name, lines.front().first,
             "expected header '" + std::string(kAnnotationHeader) + "'");
  }

  std::vector<AnnotationRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line_no, line] = lines[i];
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      csv_fail(name, line_no,
               "expected 7 fields, found " + std::to_string(fields.size()));
    }
    AnnotationRecord record;
    record.worker_id = fields[0];
    record.hit_id = fields[1];
    record.doc_id = fields[2];
    if (record.worker_id.empty() || record.hit_id.empty() ||
        record.doc_id.empty()) {
      csv_fail(name, line_no, "worker_id, hit_id, doc_id must be non-empty");
    }
    record.sentence_index = static_cast<std::size_t>(
        parse_uint(fields[3], name, line_no, "sentence_index"));
    const auto label = parse_label(fields[4]);
    if (!label) {
      csv_fail(name, line_no, "unknown label '" + fields[4] + "'");
    }
    record.label = *label;
    record.duration_secs = parse_real(fields[5], name, line_no, "duration_secs");
    if (record.duration_secs <= 0.0) {
      csv_fail(name, line_no, "duration_secs must be > 0");
    }
    record.submitted_at = fields[6];
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path) {
  return parse_annotations_csv(read_file(path, "annotations file"),
                               path.string());
}

WorkerProfiles parse_worker_profiles_csv(std::string_view text,
                                         std::string_view name) {
  const auto lines = content_lines(text);
  if (lines.empty()) {
    throw ContractError(std::string(name) + ": empty worker profile file");
  }
  if (trim(lines.front().second) != kProfileHeader) {
    csv_fail(name, lines.front().first,
             "expected header '" + std::string(kProfileHeader) + "'");
  }

  WorkerProfiles profiles;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line_no, line] = lines[i];
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      csv_fail(name, line_no,
               "expected 3 fields, found " + std::to_string(fields.size()));
    }
    WorkerProfile profile;
    profile.worker_id = fields[0];
    if (profile.worker_id.empty()) {
      csv_fail(name, line_no, "worker_id must be non-empty");
    }
    profile.accepted = parse_uint(fields[1], name, line_no, "accepted");
    profile.total = parse_uint(fields[2], name, line_no, "total");
    if (profile.accepted > profile.total) {
      csv_fail(name, line_no, "accepted exceeds total");
    }
    if (!profiles.emplace(profile.worker_id, profile).second) {
      csv_fail(name, line_no, "duplicate worker '" + profile.worker_id + "'");
    }
  }
  return profiles;
}

WorkerProfiles load_worker_profiles(const std::filesystem::path& path) {
  return parse_worker_profiles_csv(read_file(path, "worker profile file"),
                                   path.string());
}

void attach_batch_durations(WorkerProfiles& profiles,
                            std::span<const AnnotationRecord> records) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& record : records) {
    if (!seen.emplace(record.hit_id, record.worker_id).second) continue;
    auto [it, inserted] = profiles.try_emplace(record.worker_id);
    if (inserted) it->second.worker_id = record.worker_id;
    it->second.durations.push_back(record.duration_secs);
  }
}

void save_rejections(const std::filesystem::path& path,
                     std::span<const RejectedHit> rejected) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open rejection report for writing: " +
                  path.string());
  }
  out << kRejectionHeader << "\n";
  for (const auto& hit : rejected) {
    out << hit.hit_id << ',' << hit.worker_id << ','
        << rejection_reason_name(hit.reason) << "\n";
  }
  if (!out) {
    throw IoError("failed to write rejection report: " + path.string());
  }
}

}  // namespace nep
