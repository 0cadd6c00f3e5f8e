#include "nep/segment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nep/errors.hpp"
#include "nep/text.hpp"

namespace nep {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kProbFloor = 1e-12;

double floored_log(double p) { return std::log(std::max(p, kProbFloor)); }

std::uint64_t pack_context(std::span<const EventLabel> context) {
  std::uint64_t key = 0;
  for (EventLabel label : context) {
    key = (key << 4) | label_index(label);
  }
  return key;
}

std::vector<EventLabel> unpack_context(std::uint64_t key, std::size_t length) {
  std::vector<EventLabel> context(length);
  for (std::size_t i = length; i-- > 0;) {
    context[i] = label_from_index(key & 0xF);
    key >>= 4;
  }
  return context;
}

}  // namespace

std::optional<SegmentMode> parse_segment_mode(std::string_view text) {
  const std::string lowered = to_lower(text);
  if (lowered == "baseline") return SegmentMode::Baseline;
  if (lowered == "hmm") return SegmentMode::Hmm;
  return std::nullopt;
}

std::string_view segment_mode_name(SegmentMode mode) {
  return mode == SegmentMode::Baseline ? "baseline" : "hmm";
}

BoundaryContextTable BoundaryContextTable::fit(
    std::span<const LabeledSequence> sequences, std::uint32_t context_length) {
  if (sequences.empty()) {
    throw ContractError("boundary model: empty training set");
  }
  if (context_length > kMaxContextLength) {
    throw ContractError("boundary model: context length exceeds " +
                        std::to_string(kMaxContextLength));
  }

  BoundaryContextTable table;
  table.context_length_ = context_length;

  std::vector<std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>>>
      counts(context_length + 1);
  for (const auto& sequence : sequences) {
    if (!sequence.boundaries) {
      throw ContractError("boundary model: training sequence lacks boundaries");
    }
    const auto& labels = sequence.labels;
    const auto& boundaries = *sequence.boundaries;
    const std::size_t n_labels = labels.size();
    for (std::size_t b : boundaries) {
      if (b >= n_labels) {
        throw ContractError("boundary model: boundary index out of range");
      }
    }
    if (n_labels > 0 && boundaries.count(n_labels - 1) == 0) {
      throw ContractError(
          "boundary model: last sentence must close a passage");
    }

    for (std::size_t n = 0; n < n_labels; ++n) {
      const bool is_boundary = boundaries.count(n) > 0;
      ++table.total_events_;
      if (is_boundary) ++table.boundary_events_;
      const std::size_t max_len = std::min<std::size_t>(context_length, n) + 1;
      for (std::size_t window = 1; window <= max_len; ++window) {
        const auto key = pack_context(
            std::span<const EventLabel>(labels).subspan(n - window + 1, window));
        auto& cell = counts[window - 1][key];
        ++cell.second;
        if (is_boundary) ++cell.first;
      }
    }
  }

  table.global_rate_ =
      table.total_events_ == 0
          ? 0.0
          : static_cast<double>(table.boundary_events_) / table.total_events_;
  table.keys_.resize(counts.size());
  table.cells_.resize(counts.size());
  for (std::size_t m = 0; m < counts.size(); ++m) {
    table.keys_[m].reserve(counts[m].size());
    table.cells_[m].reserve(counts[m].size());
    for (const auto& [key, cell] : counts[m]) {
      table.keys_[m].push_back(key);
      table.cells_[m].push_back(cell);
    }
  }
  return table;
}

std::optional<std::pair<std::uint64_t, std::uint64_t>>
BoundaryContextTable::lookup(std::span<const EventLabel> context) const {
  if (context.empty() || context.size() > keys_.size()) return std::nullopt;
  const auto& keys = keys_[context.size() - 1];
  const std::uint64_t key = pack_context(context);
  const auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return std::nullopt;
  return cells_[context.size() - 1][static_cast<std::size_t>(it - keys.begin())];
}

double BoundaryContextTable::boundary_prob(
    std::span<const EventLabel> context) const {
  if (context.empty()) {
    throw ContractError("boundary_prob: empty context");
  }
  std::size_t window = std::min<std::size_t>(context.size(), context_length_ + 1);
  for (; window >= 1; --window) {
    const auto counts = lookup(context.subspan(context.size() - window));
    if (counts && counts->second > 0) {
      return static_cast<double>(counts->first) / counts->second;
    }
  }
  return global_rate_;
}

std::vector<BoundaryContextTable::Entry> BoundaryContextTable::entries() const {
  std::vector<Entry> out;
  for (std::size_t m = 0; m < keys_.size(); ++m) {
    for (std::size_t i = 0; i < keys_[m].size(); ++i) {
      out.push_back(Entry{unpack_context(keys_[m][i], m + 1),
                          cells_[m][i].first, cells_[m][i].second});
    }
  }
  return out;
}

std::string BoundaryContextTable::to_json() const {
  ordered_json j;
  j["version"] = 1;
  j["L"] = context_length_;
  ordered_json table_list = ordered_json::array();
  for (const Entry& entry : entries()) {
    ordered_json row;
    ordered_json context = ordered_json::array();
    for (EventLabel label : entry.context) {
      context.push_back(std::string(label_name(label)));
    }
    row["context"] = std::move(context);
    row["boundary"] = entry.boundary;
    row["total"] = entry.total;
    table_list.push_back(std::move(row));
  }
  j["tables"] = std::move(table_list);
  j["global_rate"] = global_rate_;
  return j.dump(2) + "\n";
}

BoundaryContextTable BoundaryContextTable::from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw VersionError(std::string("boundary table is not valid JSON: ") +
                       e.what());
  }
  try {
    const auto version = j.at("version").get<std::int64_t>();
    if (version != 1) {
      throw VersionError("boundary table: unsupported version " +
                         std::to_string(version));
    }
    BoundaryContextTable table;
    const auto context_length = j.at("L").get<std::int64_t>();
    if (context_length < 0 || context_length > kMaxContextLength) {
      throw VersionError("boundary table: L out of range");
    }
    table.context_length_ = static_cast<std::uint32_t>(context_length);
    table.global_rate_ = j.at("global_rate").get<double>();
    if (table.global_rate_ < 0.0 || table.global_rate_ > 1.0) {
      throw VersionError("boundary table: global_rate outside [0,1]");
    }

    std::vector<std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>>>
        counts(table.context_length_ + 1);
    for (const auto& row : j.at("tables")) {
      std::vector<EventLabel> context;
      for (const auto& name : row.at("context")) {
        context.push_back(require_label(name.get<std::string>()));
      }
      if (context.empty() ||
          context.size() > table.context_length_ + std::size_t{1}) {
        throw VersionError("boundary table: context length out of range");
      }
      const auto boundary = row.at("boundary").get<std::uint64_t>();
      const auto total = row.at("total").get<std::uint64_t>();
      if (boundary > total) {
        throw VersionError("boundary table: boundary count exceeds total");
      }
      const auto [it, inserted] = counts[context.size() - 1].emplace(
          pack_context(context), std::make_pair(boundary, total));
      (void)it;
      if (!inserted) {
        throw VersionError("boundary table: duplicate context entry");
      }
    }
    table.keys_.resize(counts.size());
    table.cells_.resize(counts.size());
    for (std::size_t m = 0; m < counts.size(); ++m) {
      for (const auto& [key, cell] : counts[m]) {
        table.keys_[m].push_back(key);
        table.cells_[m].push_back(cell);
      }
    }
    return table;
  } catch (const ordered_json::exception& e) {
    throw VersionError(
        std::string("boundary table: missing or mistyped field: ") + e.what());
  } catch (const ContractError& e) {
    throw VersionError(std::string("boundary table: ") + e.what());
  }
}

void BoundaryContextTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open boundary table for writing: " + path.string());
  }
  out << to_json();
  if (!out) {
    throw IoError("failed to write boundary table: " + path.string());
  }
}

BoundaryContextTable BoundaryContextTable::load(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open boundary table: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

EventLabel majority_label(std::span<const EventLabel> labels,
                          std::size_t begin, std::size_t end) {
  if (begin > end || end >= labels.size()) {
    throw ContractError("majority_label: span out of range");
  }
  std::array<std::uint32_t, kLabelCount> counts{};
  std::array<std::size_t, kLabelCount> first_seen{};
  first_seen.fill(std::numeric_limits<std::size_t>::max());
  for (std::size_t i = begin; i <= end; ++i) {
    const auto c = label_index(labels[i]);
    if (counts[c] == 0) first_seen[c] = i;
    ++counts[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < kLabelCount; ++c) {
    if (counts[c] > counts[best] ||
        (counts[c] == counts[best] && first_seen[c] < first_seen[best])) {
      best = c;
    }
  }
  return label_from_index(best);
}

std::vector<Passage> baseline_segment(std::span<const EventLabel> labels) {
  std::vector<Passage> passages;
  std::size_t start = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i + 1 == labels.size() || labels[i + 1] != labels[i]) {
      passages.push_back(Passage{start, i, labels[i]});
      start = i + 1;
    }
  }
  return passages;
}

std::vector<Passage> viterbi_segment(std::span<const EventLabel> labels,
                                     const BoundaryContextTable& table,
                                     std::size_t min_len) {
  const std::size_t n = labels.size();
  if (n == 0) {
    throw ContractError("viterbi_segment: empty label sequence");
  }
  if (min_len == 0) {
    throw ContractError("viterbi_segment: min_len must be >= 1");
  }
  if (min_len > n) {
    throw ContractError("viterbi_segment: min_len exceeds sequence length");
  }

  // Boundary probability at each position; the context is the label window
  // ending there, independent of earlier boundary decisions.
  std::vector<double> log_cut(n);
  std::vector<double> log_run(n);
  const std::size_t window_cap = table.context_length() + std::size_t{1};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t window = std::min(window_cap, i + 1);
    const double p = table.boundary_prob(labels.subspan(i - window + 1, window));
    log_cut[i] = floored_log(p);
    log_run[i] = floored_log(1.0 - p);
  }

  // dp[i][d]: best log-prob after deciding position i, where d = i minus
  // the latest boundary index (d = i + 1 when none yet). Non-boundary moves
  // d -> d + 1; a boundary needs the closing passage, length d + 1, to meet
  // min_len.
  std::vector<std::vector<double>> dp(n, std::vector<double>(n + 1, kNegInf));
  std::vector<std::size_t> cut_len(n, 0);  // passage length used to reach dp[i][0]

  if (min_len <= 1) {
    dp[0][0] = log_cut[0];
    cut_len[0] = 1;
  }
  dp[0][1] = log_run[0];
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t d = 1; d <= i + 1; ++d) {
      if (dp[i - 1][d - 1] == kNegInf) continue;
      const double run = dp[i - 1][d - 1] + log_run[i];
      if (run > dp[i][d]) dp[i][d] = run;
      if (d >= min_len) {
        const double cut = dp[i - 1][d - 1] + log_cut[i];
        if (cut > dp[i][0]) {
          dp[i][0] = cut;
          cut_len[i] = d;
        }
      }
    }
  }

  std::vector<Passage> passages;
  std::size_t end = n - 1;
  while (true) {
    const std::size_t length = cut_len[end];
    if (length == 0 || length > end + 1) {
      throw ContractError("viterbi_segment: no feasible segmentation");
    }
    const std::size_t start = end + 1 - length;
    passages.push_back(
        Passage{start, end, majority_label(labels, start, end)});
    if (start == 0) break;
    end = start - 1;
    if (cut_len[end] == 0) {
      throw ContractError("viterbi_segment: no feasible segmentation");
    }
  }
  std::reverse(passages.begin(), passages.end());
  return passages;
}

double segmentation_log_prob(std::span<const EventLabel> labels,
                             const std::set<std::size_t>& boundaries,
                             const BoundaryContextTable& table) {
  const std::size_t n = labels.size();
  const std::size_t window_cap = table.context_length() + std::size_t{1};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t window = std::min(window_cap, i + 1);
    const double p = table.boundary_prob(labels.subspan(i - window + 1, window));
    total += boundaries.count(i) > 0 ? floored_log(p) : floored_log(1.0 - p);
  }
  return total;
}

LabeledSequence sequence_from_document(const Document& doc) {
  if (!doc.gold_labels) {
    throw ContractError("document '" + doc.id + "' has no gold labels");
  }
  LabeledSequence sequence;
  sequence.labels = *doc.gold_labels;
  if (doc.gold_passages) {
    std::set<std::size_t> ends;
    for (const Passage& passage : *doc.gold_passages) {
      ends.insert(passage.end);
    }
    sequence.boundaries = std::move(ends);
  }
  return sequence;
}

SegmentedDocument segment_document(const EnsembleModel& model,
                                   const BoundaryContextTable* table,
                                   const Document& doc, SegmentMode mode,
                                   std::size_t min_len) {
  SegmentedDocument out;
  out.doc_id = doc.id;
  if (doc.sentences.empty()) return out;

  for (const SentenceClassification& sc : classify_document(model, doc)) {
    out.sentence_labels.push_back(sc.label);
  }
  if (mode == SegmentMode::Baseline) {
    out.passages = baseline_segment(out.sentence_labels);
  } else {
    if (table == nullptr) {
      throw ContractError("hmm segmentation requires a boundary table");
    }
    const std::size_t effective_min =
        std::min(min_len, out.sentence_labels.size());
    out.passages = viterbi_segment(out.sentence_labels, *table, effective_min);
  }
  validate_tiling(out.passages, out.sentence_labels.size(),
                  "segment_document");
  return out;
}

}  // namespace nep
