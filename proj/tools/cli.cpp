#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nep/classify.hpp"
#include "nep/config.hpp"
#include "nep/corpus.hpp"
#include "nep/crowd.hpp"
#include "nep/errors.hpp"
#include "nep/labels.hpp"
#include "nep/metrics.hpp"
#include "nep/pipeline.hpp"
#include "nep/segment.hpp"
#include "nep/synth.hpp"
#include "nep/text.hpp"

namespace nep::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

PipelineConfig config_from_flag(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

// "gold.jsonl" + ".rejections" + ".csv" -> "gold.rejections.csv";
// an empty override keeps the derived name.
fs::path derive_path(const fs::path& base, std::string_view infix,
                     std::string_view extension) {
  fs::path out = base.parent_path() / base.stem();
  out += infix;
  out += extension.empty() ? base.extension().string() : std::string(extension);
  return out;
}

void sort_by_id(std::vector<Document>& docs) {
  std::stable_sort(docs.begin(), docs.end(),
                   [](const Document& a, const Document& b) {
                     return a.id < b.id;
                   });
}

std::ofstream open_output(const fs::path& path, std::string_view what) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + std::string(what) + " for writing: " +
                  path.string());
  }
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path,
                   std::string_view what) {
  out.flush();
  if (!out) {
    throw IoError("failed to write " + std::string(what) + ": " +
                  path.string());
  }
}

std::string format_real(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

// ----- train ---------------------------------------------------------------

int cmd_train(const std::string& corpus_path, const std::string& config_path,
              const std::string& out_path, const std::string& table_out,
              const std::optional<std::uint64_t>& seed) {
  PipelineConfig config = config_from_flag(config_path);
  if (seed) config.seed = *seed;

  const auto docs = load_corpus(corpus_path);
  const auto resources = load_resources(config);
  TrainStats stats;
  const TrainedArtifacts artifacts =
      train_pipeline(docs, config, resources, &stats);

  save_ensemble(artifacts.model, out_path);
  std::cout << "trained on " << stats.documents << " documents ("
            << stats.sentences << " sentences), vocabulary "
            << stats.vocabulary << " features\n";
  std::cout << "model written to " << out_path << "\n";

  if (artifacts.table) {
    const fs::path table_path = table_out.empty()
                                    ? derive_path(out_path, ".table", "")
                                    : fs::path(table_out);
    artifacts.table->save(table_path);
    std::cout << "boundary table: " << stats.passage_sequences
              << " sequences, L=" << artifacts.table->context_length()
              << ", global rate "
              << format_real(artifacts.table->global_boundary_rate()) << "\n";
    std::cout << "boundary table written to " << table_path.string() << "\n";
  } else {
    std::cout << "boundary table skipped: no gold passages in corpus\n";
  }
  return 0;
}

// ----- classify ------------------------------------------------------------

int cmd_classify(const std::string& model_path, const std::string& in_path,
                 const std::string& out_path) {
  const EnsembleModel model = load_ensemble(model_path);
  auto docs = load_corpus(in_path);
  sort_by_id(docs);

  auto out = open_output(out_path, "predictions file");
  std::size_t sentences = 0;
  for (const Document& doc : docs) {
    const auto classifications = classify_document(model, doc);
    sentences += classifications.size();

    Document pred;
    pred.id = doc.id;
    pred.sentences = doc.sentences;
    std::vector<EventLabel> labels;
    for (const auto& sc : classifications) labels.push_back(sc.label);
    pred.gold_labels = std::move(labels);

    ordered_json line = ordered_json::parse(document_to_json_line(pred));
    ordered_json scores = ordered_json::array();
    for (const auto& sc : classifications) scores.push_back(sc.scores);
    line["scores"] = std::move(scores);
    out << line.dump() << "\n";
  }
  finish_output(out, out_path, "predictions file");
  std::cout << "classified " << docs.size() << " documents (" << sentences
            << " sentences) -> " << out_path << "\n";
  return 0;
}

// ----- segment ---------------------------------------------------------
// Output: {"version":1,"mode":...,"documents":[{"id","labels","passages"}]}

int cmd_segment(const std::string& model_path, const std::string& table_path,
                const std::string& in_path, const std::string& mode_text,
                const std::string& config_path, const std::string& out_path) {
  const auto mode = parse_segment_mode(mode_text);
  if (!mode) {
    throw ContractError("unknown segmentation mode '" + mode_text +
                        "' (expected baseline or hmm)");
  }
  if (*mode == SegmentMode::Hmm && table_path.empty()) {
    throw ContractError("hmm mode requires --table");
  }
  const PipelineConfig config = config_from_flag(config_path);
  const EnsembleModel model = load_ensemble(model_path);
  std::optional<BoundaryContextTable> table;
  if (!table_path.empty()) table = BoundaryContextTable::load(table_path);

  auto docs = load_corpus(in_path);
  sort_by_id(docs);

  ordered_json root;
  root["version"] = 1;
  root["mode"] = std::string(segment_mode_name(*mode));
  ordered_json documents = ordered_json::array();
  std::size_t total_passages = 0;
  for (const Document& doc : docs) {
    const SegmentedDocument seg =
        segment_document(model, table ? &*table : nullptr, doc, *mode,
                         config.min_passage_len);
    ordered_json entry;
    entry["id"] = seg.doc_id;
    ordered_json labels = ordered_json::array();
    for (EventLabel label : seg.sentence_labels) {
      labels.push_back(std::string(label_name(label)));
    }
    entry["labels"] = std::move(labels);
    ordered_json passages = ordered_json::array();
    for (const Passage& p : seg.passages) {
      ordered_json pj;
      pj["start"] = p.start;
      pj["end"] = p.end;
      pj["label"] = std::string(label_name(p.label));
      passages.push_back(std::move(pj));
    }
    total_passages += seg.passages.size();
    entry["passages"] = std::move(passages);
    documents.push_back(std::move(entry));
  }
  root["documents"] = std::move(documents);

  auto out = open_output(out_path, "passages file");
  out << root.dump(2) << "\n";
  finish_output(out, out_path, "passages file");
  std::cout << "segmented " << docs.size() << " documents into "
            << total_passages << " passages (" << segment_mode_name(*mode)
            << ") -> " << out_path << "\n";
  return 0;
}

// ----- aggregate -------------------------------------------------------

int cmd_aggregate(const std::string& annotations_path,
                  const std::string& profiles_path,
                  const std::string& corpus_path, const std::string& mode_text,
                  const std::string& config_path, const std::string& out_path,
                  const std::string& rejections_out) {
  const auto mode = parse_score_mode(mode_text);
  if (!mode) {
    throw ContractError("unknown scoring mode '" + mode_text +
                        "' (expected unweighted or weighted)");
  }
  const PipelineConfig config = config_from_flag(config_path);

  const auto records = load_annotations(annotations_path);
  WorkerProfiles profiles;
  if (!profiles_path.empty()) profiles = load_worker_profiles(profiles_path);
  attach_batch_durations(profiles, records);

  const FilterResult filtered =
      filter_bad_hits(records, profiles, config.crowd);
  const fs::path rejections_path =
      rejections_out.empty() ? derive_path(out_path, ".rejections", ".csv")
                             : fs::path(rejections_out);
  save_rejections(rejections_path, filtered.rejected);

  const auto base = load_corpus(corpus_path);
  GoldExport gold = export_gold(base, filtered.kept, profiles, *mode);

  std::vector<std::size_t> order(gold.documents.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&gold](std::size_t a, std::size_t b) {
                     return gold.documents[a].id < gold.documents[b].id;
                   });

  auto out = open_output(out_path, "gold corpus");
  for (std::size_t i : order) {
    ordered_json line =
        ordered_json::parse(document_to_json_line(gold.documents[i]));
    ordered_json scores = ordered_json::array();
    for (const auto& row : gold.scores[i]) scores.push_back(row);
    line["scores"] = std::move(scores);
    out << line.dump() << "\n";
  }
  finish_output(out, out_path, "gold corpus");

  std::cout << "kept " << filtered.kept.size() << " of " << records.size()
            << " records; rejected " << filtered.rejected.size()
            << " hits -> " << rejections_path.string() << "\n";
  const RatingMatrixSummary agreement = build_rating_matrix(filtered.kept);
  if (agreement.subjects > 0) {
    std::cout << "fleiss kappa " << format_real(fleiss_kappa(agreement.matrix))
              << " over " << agreement.subjects << " sentences ("
              << agreement.raters << " raters each, " << agreement.skipped
              << " skipped)\n";
  } else {
    std::cout << "fleiss kappa not computable: no sentence has two raters\n";
  }
  std::cout << "gold corpus (" << gold.documents.size() << " documents, "
            << score_mode_name(*mode) << " scoring) -> " << out_path << "\n";
  return 0;
}

// ----- evaluate --------------------------------------------------------

struct ScoredCorpus {
  std::vector<Document> docs;
  // Parallel to docs; a row per sentence when the file carried scores.
  std::vector<std::optional<std::vector<std::array<double, kLabelCount>>>>
      scores;
};

ScoredCorpus load_scored_corpus(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open corpus file: " + path.string());
  }
  ScoredCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      corpus.docs.push_back(document_from_json_line(line));
      std::optional<std::vector<std::array<double, kLabelCount>>> doc_scores;
      const ordered_json j = ordered_json::parse(line);
      if (j.contains("scores")) {
        std::vector<std::array<double, kLabelCount>> rows;
        for (const auto& row : j["scores"]) {
          const auto values = row.get<std::vector<double>>();
          if (values.size() != kLabelCount) {
            throw ContractError("scores row must have " +
                                std::to_string(kLabelCount) + " entries");
          }
          std::array<double, kLabelCount> arr{};
          std::copy(values.begin(), values.end(), arr.begin());
          rows.push_back(arr);
        }
        if (rows.size() != corpus.docs.back().sentences.size()) {
          throw ContractError("scores rows do not match sentence count");
        }
        doc_scores = std::move(rows);
      }
      corpus.scores.push_back(std::move(doc_scores));
    } catch (const ordered_json::exception& e) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": malformed JSON record: " + e.what());
    } catch (const ContractError& e) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": " + e.what());
    }
  }
  std::vector<std::size_t> order(corpus.docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&corpus](std::size_t a, std::size_t b) {
                     return corpus.docs[a].id < corpus.docs[b].id;
                   });
  ScoredCorpus sorted;
  for (std::size_t i : order) {
    sorted.docs.push_back(std::move(corpus.docs[i]));
    sorted.scores.push_back(std::move(corpus.scores[i]));
  }
  return sorted;
}

struct PassagesFile {
  std::string mode;
  std::map<std::string, std::vector<Passage>> by_id;
};

PassagesFile load_passages_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open passages file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ordered_json j;
  try {
    j = ordered_json::parse(buffer.str());
  } catch (const ordered_json::exception& e) {
    throw VersionError(path.string() + ": not valid JSON: " + e.what());
  }
  try {
    if (j.at("version").get<std::int64_t>() != 1) {
      throw VersionError(path.string() + ": unsupported version");
    }
    PassagesFile file;
    file.mode = j.at("mode").get<std::string>();
    for (const auto& entry : j.at("documents")) {
      std::vector<Passage> passages;
      for (const auto& pj : entry.at("passages")) {
        Passage p;
        p.start = pj.at("start").get<std::size_t>();
        p.end = pj.at("end").get<std::size_t>();
        p.label = require_label(pj.at("label").get<std::string>());
        passages.push_back(p);
      }
      const auto id = entry.at("id").get<std::string>();
      if (!file.by_id.emplace(id, std::move(passages)).second) {
        throw VersionError(path.string() + ": duplicate document '" + id + "'");
      }
    }
    return file;
  } catch (const ordered_json::exception& e) {
    throw VersionError(path.string() + ": missing or mistyped field: " +
                       e.what());
  }
}

RankedLabels ranking_for_sentence(
    EventLabel pred_label,
    const std::optional<std::vector<std::array<double, kLabelCount>>>& scores,
    std::size_t sentence, const std::array<double, kLabelCount>& gains) {
  RankedLabels ranked;
  ranked.gains = gains;
  if (scores) {
    const auto& row = (*scores)[sentence];
    auto order = all_labels();
    std::stable_sort(order.begin(), order.end(),
                     [&row](EventLabel a, EventLabel b) {
                       return row[label_index(a)] > row[label_index(b)];
                     });
    ranked.labels.assign(order.begin(), order.end());
  } else {
    ranked.labels.push_back(pred_label);
    for (EventLabel label : all_labels()) {
      if (label != pred_label) ranked.labels.push_back(label);
    }
  }
  return ranked;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 const std::vector<std::string>& passages_paths,
                 const std::string& config_path, const std::string& out_path) {
  const PipelineConfig config = config_from_flag(config_path);
  const ScoredCorpus pred = load_scored_corpus(pred_path);
  const ScoredCorpus gold = load_scored_corpus(gold_path);

  if (pred.docs.size() != gold.docs.size()) {
    throw ContractError("prediction and gold corpora differ in size (" +
                        std::to_string(pred.docs.size()) + " vs " +
                        std::to_string(gold.docs.size()) + " documents)");
  }
  for (std::size_t i = 0; i < pred.docs.size(); ++i) {
    if (pred.docs[i].id != gold.docs[i].id) {
      throw ContractError("document ids differ: '" + pred.docs[i].id +
                          "' vs '" + gold.docs[i].id + "'");
    }
    if (pred.docs[i].sentences.size() != gold.docs[i].sentences.size()) {
      throw ContractError("document '" + pred.docs[i].id +
                          "': sentence counts differ");
    }
    if (!pred.docs[i].gold_labels) {
      throw ContractError("prediction document '" + pred.docs[i].id +
                          "' has no labels");
    }
    if (!gold.docs[i].gold_labels) {
      throw ContractError("gold document '" + gold.docs[i].id +
                          "' has no labels");
    }
  }

  std::vector<EventLabel> pred_labels;
  std::vector<EventLabel> gold_labels;
  for (std::size_t i = 0; i < pred.docs.size(); ++i) {
    pred_labels.insert(pred_labels.end(), pred.docs[i].gold_labels->begin(),
                       pred.docs[i].gold_labels->end());
    gold_labels.insert(gold_labels.end(), gold.docs[i].gold_labels->begin(),
                       gold.docs[i].gold_labels->end());
  }
  const PRF1Report prf = prf1(pred_labels, gold_labels);

  // Ranked lists come from classifier scores when the prediction file has
  // them; gains come from gold vote scores when present, else one-hot on
  // the gold label.
  double ndcg_sum = 0.0;
  std::array<double, kLabelCount> ndcg_class_sum{};
  std::array<std::size_t, kLabelCount> ndcg_class_count{};
  std::size_t total_sentences = 0;
  for (std::size_t i = 0; i < pred.docs.size(); ++i) {
    const auto& gold_doc = gold.docs[i];
    for (std::size_t s = 0; s < gold_doc.sentences.size(); ++s) {
      std::array<double, kLabelCount> gains{};
      if (gold.scores[i]) {
        gains = (*gold.scores[i])[s];
      } else {
        gains[label_index((*gold_doc.gold_labels)[s])] = 1.0;
      }
      const RankedLabels ranked = ranking_for_sentence(
          (*pred.docs[i].gold_labels)[s], pred.scores[i], s, gains);
      const double value = ndcg(ranked, config.ndcg_cutoff);
      ndcg_sum += value;
      const EventLabel top_gold =
          argmax_with_priority(gains, std::span<const EventLabel>(all_labels()));
      ndcg_class_sum[label_index(top_gold)] += value;
      ++ndcg_class_count[label_index(top_gold)];
      ++total_sentences;
    }
  }

  struct BCubedEntry {
    BCubedTotals totals;
    std::size_t documents = 0;
  };
  std::map<std::string, BCubedEntry> bcubed_entries;

  std::size_t both_passages = 0;
  BCubedTotals pred_totals;
  for (std::size_t i = 0; i < pred.docs.size(); ++i) {
    if (pred.docs[i].gold_passages && gold.docs[i].gold_passages) {
      pred_totals.add(*pred.docs[i].gold_passages, *gold.docs[i].gold_passages,
                      gold.docs[i].sentences.size());
      ++both_passages;
    }
  }
  if (both_passages > 0) {
    bcubed_entries["pred"] = BCubedEntry{pred_totals, both_passages};
  }

  for (const auto& path : passages_paths) {
    PassagesFile file = load_passages_file(path);
    BCubedEntry entry;
    for (std::size_t i = 0; i < gold.docs.size(); ++i) {
      const auto& gold_doc = gold.docs[i];
      const auto it = file.by_id.find(gold_doc.id);
      if (it == file.by_id.end()) {
        throw ContractError(path + ": no passages for document '" +
                            gold_doc.id + "'");
      }
      if (!gold_doc.gold_passages) {
        throw ContractError("gold document '" + gold_doc.id +
                            "' has no gold passages");
      }
      entry.totals.add(it->second, *gold_doc.gold_passages,
                       gold_doc.sentences.size());
      ++entry.documents;
      file.by_id.erase(it);
    }
    if (!file.by_id.empty()) {
      throw ContractError(path + ": passages for unknown document '" +
                          file.by_id.begin()->first + "'");
    }
    if (!bcubed_entries.emplace(file.mode, std::move(entry)).second) {
      throw ContractError("two passage files share mode '" + file.mode + "'");
    }
  }

  ordered_json report;
  report["version"] = 1;
  report["documents"] = pred.docs.size();
  report["sentences"] = total_sentences;

  ordered_json prf_json;
  ordered_json per_class = ordered_json::array();
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const ClassMetrics& m = prf.per_class[c];
    ordered_json row;
    row["label"] = std::string(label_name(label_from_index(c)));
    row["precision"] = m.precision;
    row["recall"] = m.recall;
    row["f1"] = m.f1;
    row["support"] = m.support;
    per_class.push_back(std::move(row));
  }
  prf_json["per_class"] = std::move(per_class);
  ordered_json weighted;
  weighted["precision"] = prf.weighted_precision;
  weighted["recall"] = prf.weighted_recall;
  weighted["f1"] = prf.weighted_f1;
  prf_json["weighted_avg"] = std::move(weighted);
  report["prf1"] = std::move(prf_json);

  ordered_json ndcg_json;
  ndcg_json["cutoff"] = config.ndcg_cutoff;
  ndcg_json["mean"] = ndcg_sum / static_cast<double>(total_sentences);
  ordered_json ndcg_classes = ordered_json::array();
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    ordered_json row;
    row["label"] = std::string(label_name(label_from_index(c)));
    row["ndcg"] = ndcg_class_count[c] == 0
                      ? 0.0
                      : ndcg_class_sum[c] /
                            static_cast<double>(ndcg_class_count[c]);
    row["sentences"] = ndcg_class_count[c];
    ndcg_classes.push_back(std::move(row));
  }
  ndcg_json["per_class"] = std::move(ndcg_classes);
  report["ndcg"] = std::move(ndcg_json);

  if (!bcubed_entries.empty()) {
    ordered_json bc;
    for (const auto& [mode, entry] : bcubed_entries) {
      const BCubedScore score = entry.totals.score();
      ordered_json row;
      row["precision"] = score.precision;
      row["recall"] = score.recall;
      row["f1"] = score.f1;
      row["documents"] = entry.documents;
      bc[mode] = std::move(row);
    }
    report["bcubed"] = std::move(bc);
  }

  auto out = open_output(out_path, "evaluation report");
  out << report.dump(2) << "\n";
  finish_output(out, out_path, "evaluation report");

  std::cout << "weighted P/R/F1 " << format_real(prf.weighted_precision) << "/"
            << format_real(prf.weighted_recall) << "/"
            << format_real(prf.weighted_f1) << " over " << total_sentences
            << " sentences\n";
  std::cout << "mean ndcg@" << config.ndcg_cutoff << " "
            << format_real(ndcg_sum / static_cast<double>(total_sentences))
            << "\n";
  for (const auto& [mode, entry] : bcubed_entries) {
    const BCubedScore score = entry.totals.score();
    std::cout << "bcubed[" << mode << "] P/R/F1 "
              << format_real(score.precision) << "/"
              << format_real(score.recall) << "/" << format_real(score.f1)
              << "\n";
  }
  std::cout << "report -> " << out_path << "\n";
  return 0;
}

// ----- synth -----------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& out_path,
              const std::optional<std::uint64_t>& seed) {
  SyntheticSpec spec;
  if (!spec_path.empty()) spec = load_synthetic_spec(spec_path);
  if (seed) spec.seed = *seed;
  validate_spec(spec);

  const SyntheticCorpus corpus = generate_synthetic(spec);
  save_corpus(corpus.documents, out_path);

  std::vector<Document> pre_noise = corpus.documents;
  std::size_t sentences = 0;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < pre_noise.size(); ++i) {
    const auto& clean = corpus.pre_noise_labels[i];
    const auto& noisy = *corpus.documents[i].gold_labels;
    for (std::size_t s = 0; s < clean.size(); ++s) {
      if (clean[s] != noisy[s]) ++flips;
    }
    sentences += clean.size();
    pre_noise[i].gold_labels = clean;
  }
  const fs::path sidecar = derive_path(out_path, ".prenoise", "");
  save_corpus(pre_noise, sidecar);

  std::cout << "generated " << corpus.documents.size() << " documents ("
            << sentences << " sentences, " << flips
            << " labels flipped) -> " << out_path << "\n";
  std::cout << "pre-noise labels -> " << sidecar.string() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "news-event pipeline: sentence labeling, passage segmentation, crowd "
      "consensus, evaluation"};
  app.require_subcommand(1);

  std::string corpus_path;
  std::string config_path;
  std::string model_path;
  std::string table_path;
  std::string in_path;
  std::string out_path;
  std::string table_out;
  std::string mode_text;
  std::string annotations_path;
  std::string profiles_path;
  std::string rejections_out;
  std::string pred_path;
  std::string gold_path;
  std::string spec_path;
  std::vector<std::string> passages_paths;
  std::optional<std::uint64_t> seed;

  auto* train = app.add_subcommand(
      "train", "fit the classifier ensemble and boundary table");
  train->add_option("--corpus", corpus_path, "training corpus (JSONL)")
      ->required();
  train->add_option("--config", config_path, "pipeline config file");
  train->add_option("--out", out_path, "model output path")->required();
  train->add_option("--table-out", table_out,
                    "boundary table output path (default: <out>.table.json "
                    "style sibling)");
  train->add_option("--seed", seed, "override the config seed");

  auto* classify =
      app.add_subcommand("classify", "label each sentence with the ensemble");
  classify->add_option("--model", model_path, "trained model")->required();
  classify->add_option("--in", in_path, "input corpus (JSONL)")->required();
  classify->add_option("--out", out_path, "predictions output (JSONL)")
      ->required();

  auto* segment = app.add_subcommand(
      "segment", "classify then aggregate sentences into passages");
  segment->add_option("--model", model_path, "trained model")->required();
  segment->add_option("--table", table_path,
                      "boundary table (required for --mode hmm)");
  segment->add_option("--in", in_path, "input corpus (JSONL)")->required();
  segment->add_option("--mode", mode_text, "baseline or hmm")->required();
  segment->add_option("--config", config_path, "pipeline config file");
  segment->add_option("--out", out_path, "passages output (JSON)")->required();

  auto* aggregate = app.add_subcommand(
      "aggregate", "filter crowd annotations and export consensus gold");
  aggregate
      ->add_option("--annotations", annotations_path, "annotation batch (CSV)")
      ->required();
  aggregate->add_option("--profiles", profiles_path,
                        "worker reputation profiles (CSV)");
  aggregate->add_option("--corpus", corpus_path, "base corpus (JSONL)")
      ->required();
  aggregate->add_option("--mode", mode_text, "unweighted or weighted")
      ->default_val("unweighted");
  aggregate->add_option("--config", config_path, "pipeline config file");
  aggregate->add_option("--out", out_path, "gold corpus output (JSONL)")
      ->required();
  aggregate->add_option("--rejections", rejections_out,
                        "rejection report output (CSV)");

  auto* evaluate =
      app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("--pred", pred_path, "predicted corpus (JSONL)")
      ->required();
  evaluate->add_option("--gold", gold_path, "gold corpus (JSONL)")->required();
  evaluate->add_option("--passages", passages_paths,
                       "segment output to score with B-cubed (repeatable)");
  evaluate->add_option("--config", config_path, "pipeline config file");
  evaluate->add_option("--out", out_path, "report output (JSON)")->required();

  auto* synth =
      app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--spec", spec_path, "synthetic spec (JSON)");
  synth->add_option("--out", out_path, "corpus output (JSONL)")->required();
  synth->add_option("--seed", seed, "override the spec seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) {
      return cmd_train(corpus_path, config_path, out_path, table_out, seed);
    }
    if (classify->parsed()) {
      return cmd_classify(model_path, in_path, out_path);
    }
    if (segment->parsed()) {
      return cmd_segment(model_path, table_path, in_path, mode_text,
                         config_path, out_path);
    }
    if (aggregate->parsed()) {
      return cmd_aggregate(annotations_path, profiles_path, corpus_path,
                           mode_text, config_path, out_path, rejections_out);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(pred_path, gold_path, passages_paths, config_path,
                          out_path);
    }
    if (synth->parsed()) {
      return cmd_synth(spec_path, out_path, seed);
    }
  } catch (const VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace nep::cli
