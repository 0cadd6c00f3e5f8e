#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "nep/corpus.hpp"
#include "nep/labels.hpp"
#include "nep/metrics.hpp"
#include "nep/synth.hpp"
#include "temp_dir.hpp"

using namespace nep;
using nep::testing::slurp;
using nep::testing::TempDir;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;  // captured stdout; stderr is captured too but discarded
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("nep");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& a : full) argv.push_back(a.c_str());

  std::ostringstream captured;
  std::ostringstream err_sink;
  auto* old_out = std::cout.rdbuf(captured.rdbuf());
  auto* old_err = std::cerr.rdbuf(err_sink.rdbuf());
  CliResult result;
  try {
    result.code = cli::run(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  result.out = captured.str();
  return result;
}

std::string noise_stopword_file_text() {
  std::string text;
  for (std::string_view word : synthetic_noise_words()) {
    text.append(word);
    text.push_back('\n');
  }
  return text;
}

// Shared pipeline artifacts: one synthetic train/test pair, a trained model
// with its boundary table, and classify/segment outputs over the test set.
// Built once; construction failures surface as exceptions in the first test
// that touches the workspace.
struct Workspace {
  TempDir dir;
  std::filesystem::path stopwords;
  std::filesystem::path config;
  std::filesystem::path train_corpus;
  std::filesystem::path test_corpus;
  std::filesystem::path model;
  std::filesystem::path table;
  std::filesystem::path pred;
  std::filesystem::path baseline_out;
  std::filesystem::path hmm_out;
  std::string train_stdout;
  std::string classify_stdout;
  std::string segment_baseline_stdout;
  std::string segment_hmm_stdout;

  Workspace() {
    stopwords = dir.write("stop.txt", noise_stopword_file_text());
    config = dir.write("run.cfg",
                       "features.stopwords = \"" + stopwords.string() +
                           "\"\n"
                           "classify.bag_count = 3\n"
                           "classify.max_depth = 8\n"
                           "classify.epochs = 5\n");
    dir.write("train_spec.json", R"({
      "n_docs": 30,
      "labels": ["terrorism", "strike", "bankruptcy"],
      "vocab_per_label": 8,
      "seed": 11
    })");
    dir.write("test_spec.json", R"({
      "n_docs": 8,
      "labels": ["terrorism", "strike", "bankruptcy"],
      "vocab_per_label": 8,
      "seed": 12
    })");
    train_corpus = dir.file("train.jsonl");
    test_corpus = dir.file("test.jsonl");
    model = dir.file("model.json");
    table = dir.file("model.table.json");
    pred = dir.file("pred.jsonl");
    baseline_out = dir.file("base.json");
    hmm_out = dir.file("hmm.json");

    step({"synth", "--spec", dir.file("train_spec.json").string(), "--out",
          train_corpus.string()});
    step({"synth", "--spec", dir.file("test_spec.json").string(), "--out",
          test_corpus.string()});
    train_stdout = step({"train", "--corpus", train_corpus.string(),
                         "--config", config.string(), "--out", model.string()});
    classify_stdout =
        step({"classify", "--model", model.string(), "--in",
              test_corpus.string(), "--out", pred.string()});
    segment_baseline_stdout =
        step({"segment", "--model", model.string(), "--in",
              test_corpus.string(), "--mode", "baseline", "--out",
              baseline_out.string()});
    segment_hmm_stdout =
        step({"segment", "--model", model.string(), "--table", table.string(),
              "--in", test_corpus.string(), "--mode", "hmm", "--out",
              hmm_out.string()});
  }

  std::string step(const std::vector<std::string>& args) {
    const CliResult r = run_cli(args);
    if (r.code != 0) {
      throw std::runtime_error("workspace setup: '" + args[0] +
                               "' exited with " + std::to_string(r.code) +
                               "\n" + r.out);
    }
    return r.out;
  }
};

Workspace& ws() {
  static Workspace instance;
  return instance;
}

struct PredictedDoc {
  Document doc;
  std::vector<std::array<double, kLabelCount>> scores;
};

std::vector<PredictedDoc> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<PredictedDoc> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    PredictedDoc entry;
    entry.doc = document_from_json_line(line);
    const ordered_json j = ordered_json::parse(line);
    REQUIRE(j.contains("scores"));
    for (const auto& row : j["scores"]) {
      const auto values = row.get<std::vector<double>>();
      REQUIRE(values.size() == kLabelCount);
      std::array<double, kLabelCount> arr{};
      std::copy(values.begin(), values.end(), arr.begin());
      entry.scores.push_back(arr);
    }
    REQUIRE(entry.scores.size() == entry.doc.sentences.size());
    docs.push_back(std::move(entry));
  }
  return docs;
}

struct SegmentFile {
  std::string mode;
  // Insertion order follows the file; ids are unique.
  std::vector<std::pair<std::string, std::vector<Passage>>> documents;
  std::map<std::string, std::vector<EventLabel>> labels;
};

SegmentFile read_segment_file(const std::filesystem::path& path) {
  const ordered_json j = ordered_json::parse(slurp(path));
  REQUIRE(j.at("version").get<int>() == 1);
  SegmentFile file;
  file.mode = j.at("mode").get<std::string>();
  for (const auto& entry : j.at("documents")) {
    const auto id = entry.at("id").get<std::string>();
    std::vector<Passage> passages;
    for (const auto& pj : entry.at("passages")) {
      Passage p;
      p.start = pj.at("start").get<std::size_t>();
      p.end = pj.at("end").get<std::size_t>();
      const auto label = parse_label(pj.at("label").get<std::string>());
      REQUIRE(label.has_value());
      p.label = *label;
      passages.push_back(p);
    }
    std::vector<EventLabel> labels;
    for (const auto& lj : entry.at("labels")) {
      const auto label = parse_label(lj.get<std::string>());
      REQUIRE(label.has_value());
      labels.push_back(*label);
    }
    file.documents.emplace_back(id, std::move(passages));
    file.labels[id] = std::move(labels);
  }
  return file;
}

void check_tiling(const std::vector<Passage>& passages,
                  std::size_t sentence_count) {
  REQUIRE(!passages.empty());
  CHECK(passages.front().start == 0);
  CHECK(passages.back().end == sentence_count - 1);
  for (std::size_t i = 0; i < passages.size(); ++i) {
    CHECK(passages[i].start <= passages[i].end);
    if (i > 0) CHECK(passages[i].start == passages[i - 1].end + 1);
  }
}

std::string annotation_header() {
  return "worker_id,hit_id,doc_id,sentence_index,label,duration_secs,"
         "submitted_at\n";
}

std::string annotation_row(const std::string& worker, const std::string& hit,
                           const std::string& doc, std::size_t sentence,
                           const std::string& label, double duration) {
  std::ostringstream row;
  row << worker << "," << hit << "," << doc << "," << sentence << "," << label
      << "," << duration << ",2026-01-05T09:00:00Z\n";
  return row.str();
}

Document make_doc(const std::string& id, std::size_t sentences) {
  Document doc;
  doc.id = id;
  for (std::size_t i = 0; i < sentences; ++i) {
    doc.sentences.push_back(Sentence{
        i, "Sentence number " + std::to_string(i) + " of the base text."});
  }
  return doc;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("argument errors are reported by the parser") {
  CHECK(run_cli({}).code != 0);
  CHECK(run_cli({"frobnicate"}).code != 0);
  CHECK(run_cli({"train"}).code != 0);
  CHECK(run_cli({"classify", "--model", "m.json"}).code != 0);
  CHECK(run_cli({"evaluate", "--pred", "p", "--gold", "g"}).code != 0);
}

TEST_CASE("synth generates deterministic corpora with a pre-noise sidecar") {
  TempDir dir;
  const auto spec = dir.write("spec.json", R"({
    "n_docs": 6,
    "labels": ["terrorism", "strike"],
    "vocab_per_label": 5,
    "label_noise": 0.3,
    "seed": 3
  })");

  const auto first =
      run_cli({"synth", "--spec", spec.string(), "--out",
               dir.file("a.jsonl").string()});
  REQUIRE(first.code == 0);
  CHECK(first.out.find("generated 6 documents (") != std::string::npos);
  CHECK(first.out.find("pre-noise labels -> ") != std::string::npos);
  REQUIRE(std::filesystem::exists(dir.file("a.jsonl")));
  REQUIRE(std::filesystem::exists(dir.file("a.prenoise.jsonl")));

  REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out",
                   dir.file("b.jsonl").string()})
              .code == 0);
  CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));
  CHECK(slurp(dir.file("a.prenoise.jsonl")) ==
        slurp(dir.file("b.prenoise.jsonl")));

  REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out",
                   dir.file("c.jsonl").string(), "--seed", "4"})
              .code == 0);
  CHECK(slurp(dir.file("a.jsonl")) != slurp(dir.file("c.jsonl")));

  SUBCASE("a noise-free corpus matches its own sidecar byte for byte") {
    const auto clean = dir.write("clean.json", R"({
      "n_docs": 4,
      "labels": ["terrorism", "strike"],
      "vocab_per_label": 5,
      "seed": 3
    })");
    const auto r = run_cli({"synth", "--spec", clean.string(), "--out",
                            dir.file("d.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find(" 0 labels flipped") != std::string::npos);
    CHECK(slurp(dir.file("d.jsonl")) == slurp(dir.file("d.prenoise.jsonl")));
  }

  SUBCASE("rejected specs and missing files map to exit codes") {
    const auto bad = dir.write("bad.json", R"({"label_noise": 1.0})");
    CHECK(run_cli({"synth", "--spec", bad.string(), "--out",
                   dir.file("x.jsonl").string()})
              .code == 2);
    CHECK(run_cli({"synth", "--spec", dir.file("nope.json").string(), "--out",
                   dir.file("x.jsonl").string()})
              .code == 3);
    CHECK(run_cli({"synth", "--spec", spec.string(), "--out",
                   (dir.path() / "no-such-dir" / "x.jsonl").string()})
              .code == 3);
  }
}

TEST_CASE("train writes the model and boundary table deterministically") {
  Workspace& w = ws();
  CHECK(w.train_stdout.find("trained on 30 documents (") != std::string::npos);
  CHECK(w.train_stdout.find("model written to ") != std::string::npos);
  CHECK(w.train_stdout.find("boundary table: 30 sequences, L=") !=
        std::string::npos);
  CHECK(w.train_stdout.find("boundary table written to ") !=
        std::string::npos);
  REQUIRE(std::filesystem::exists(w.model));
  REQUIRE(std::filesystem::exists(w.table));

  SUBCASE("retraining the same corpus reproduces both artifacts") {
    const auto rerun =
        run_cli({"train", "--corpus", w.train_corpus.string(), "--config",
                 w.config.string(), "--out", w.dir.file("m2.json").string()});
    REQUIRE(rerun.code == 0);
    CHECK(slurp(w.model) == slurp(w.dir.file("m2.json")));
    CHECK(slurp(w.table) == slurp(w.dir.file("m2.table.json")));
  }

  SUBCASE("a different seed changes the model") {
    const auto rerun =
        run_cli({"train", "--corpus", w.train_corpus.string(), "--config",
                 w.config.string(), "--out", w.dir.file("m3.json").string(),
                 "--seed", "99"});
    REQUIRE(rerun.code == 0);
    CHECK(slurp(w.model) != slurp(w.dir.file("m3.json")));
  }

  SUBCASE("--table-out overrides the derived sibling path") {
    const auto rerun =
        run_cli({"train", "--corpus", w.train_corpus.string(), "--config",
                 w.config.string(), "--out", w.dir.file("m4.json").string(),
                 "--table-out", w.dir.file("custom_table.json").string()});
    REQUIRE(rerun.code == 0);
    CHECK(std::filesystem::exists(w.dir.file("custom_table.json")));
    CHECK(!std::filesystem::exists(w.dir.file("m4.table.json")));
  }

  SUBCASE("a corpus without passages skips the boundary table") {
    auto docs = load_corpus(w.train_corpus);
    for (auto& doc : docs) doc.gold_passages.reset();
    const auto stripped = w.dir.file("no_passages.jsonl");
    save_corpus(docs, stripped);
    const auto rerun =
        run_cli({"train", "--corpus", stripped.string(), "--config",
                 w.config.string(), "--out", w.dir.file("m5.json").string()});
    REQUIRE(rerun.code == 0);
    CHECK(rerun.out.find("boundary table skipped: no gold passages in corpus") !=
          std::string::npos);
    CHECK(!std::filesystem::exists(w.dir.file("m5.table.json")));
  }

  SUBCASE("an unlabeled training document is a contract violation") {
    const auto bare = w.dir.file("bare.jsonl");
    save_corpus(std::vector<Document>{make_doc("d1", 2)}, bare);
    CHECK(run_cli({"train", "--corpus", bare.string(), "--out",
                   w.dir.file("m6.json").string()})
              .code == 2);
  }

  SUBCASE("a missing corpus file is an io error") {
    CHECK(run_cli({"train", "--corpus", w.dir.file("ghost.jsonl").string(),
                   "--out", w.dir.file("m7.json").string()})
              .code == 3);
  }
}

TEST_CASE("classify labels every sentence and attaches score rows") {
  Workspace& w = ws();
  CHECK(w.classify_stdout.find("classified 8 documents (") !=
        std::string::npos);

  const auto predictions = read_predictions(w.pred);
  const auto gold = load_corpus(w.test_corpus);
  REQUIRE(predictions.size() == gold.size());

  std::size_t matches = 0;
  std::size_t sentences = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    CHECK(p.doc.id == gold[i].id);
    CHECK(p.doc.sentences == gold[i].sentences);
    REQUIRE(p.doc.gold_labels.has_value());
    REQUIRE(p.doc.gold_labels->size() == p.doc.sentences.size());
    CHECK(!p.doc.gold_passages.has_value());
    for (std::size_t s = 0; s < p.doc.sentences.size(); ++s) {
      ++sentences;
      if ((*p.doc.gold_labels)[s] == (*gold[i].gold_labels)[s]) ++matches;
    }
    if (i > 0) CHECK(predictions[i - 1].doc.id < p.doc.id);
  }
  // Noise-free synthetic text is nearly separable; the ensemble should be
  // close to perfect on a held-out draw from the same spec.
  CHECK(static_cast<double>(matches) >= 0.9 * static_cast<double>(sentences));

  SUBCASE("reruns are byte-identical") {
    const auto rerun =
        run_cli({"classify", "--model", w.model.string(), "--in",
                 w.test_corpus.string(), "--out",
                 w.dir.file("pred2.jsonl").string()});
    REQUIRE(rerun.code == 0);
    CHECK(slurp(w.pred) == slurp(w.dir.file("pred2.jsonl")));
  }

  SUBCASE("an unversioned model file is rejected") {
    const auto bad = w.dir.write("bad_model.json", R"({"version": 99})");
    CHECK(run_cli({"classify", "--model", bad.string(), "--in",
                   w.test_corpus.string(), "--out",
                   w.dir.file("p.jsonl").string()})
              .code == 4);
  }

  SUBCASE("a missing input corpus is an io error") {
    CHECK(run_cli({"classify", "--model", w.model.string(), "--in",
                   w.dir.file("ghost.jsonl").string(), "--out",
                   w.dir.file("p.jsonl").string()})
              .code == 3);
  }
}

TEST_CASE("segment emits tiled passages in both modes") {
  Workspace& w = ws();
  CHECK(w.segment_baseline_stdout.find("segmented 8 documents into ") !=
        std::string::npos);
  CHECK(w.segment_baseline_stdout.find("(baseline) -> ") != std::string::npos);
  CHECK(w.segment_hmm_stdout.find("(hmm) -> ") != std::string::npos);

  const auto gold = load_corpus(w.test_corpus);
  for (const auto* path : {&w.baseline_out, &w.hmm_out}) {
    const SegmentFile file = read_segment_file(*path);
    CHECK(file.mode == (path == &w.baseline_out ? "baseline" : "hmm"));
    REQUIRE(file.documents.size() == gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
      CHECK(file.documents[i].first == gold[i].id);
      CHECK(file.labels.at(gold[i].id).size() == gold[i].sentences.size());
      check_tiling(file.documents[i].second, gold[i].sentences.size());
    }
  }

  SUBCASE("baseline passages are exactly the runs of the predicted labels") {
    const SegmentFile file = read_segment_file(w.baseline_out);
    for (const auto& [id, passages] : file.documents) {
      const auto& labels = file.labels.at(id);
      for (const Passage& p : passages) {
        for (std::size_t s = p.start; s <= p.end; ++s) {
          CHECK(labels[s] == p.label);
        }
        if (p.end + 1 < labels.size()) CHECK(labels[p.end + 1] != p.label);
      }
    }
  }

  SUBCASE("reruns are byte-identical") {
    const auto rerun =
        run_cli({"segment", "--model", w.model.string(), "--table",
                 w.table.string(), "--in", w.test_corpus.string(), "--mode",
                 "hmm", "--out", w.dir.file("hmm2.json").string()});
    REQUIRE(rerun.code == 0);
    CHECK(slurp(w.hmm_out) == slurp(w.dir.file("hmm2.json")));
  }

  SUBCASE("a minimum passage length from the config is respected") {
    const auto cfg = w.dir.write("seg.cfg", "segment.min_passage_len = 4\n");
    const auto rerun =
        run_cli({"segment", "--model", w.model.string(), "--table",
                 w.table.string(), "--in", w.test_corpus.string(), "--mode",
                 "hmm", "--config", cfg.string(), "--out",
                 w.dir.file("hmm_min4.json").string()});
    REQUIRE(rerun.code == 0);
    const SegmentFile file = read_segment_file(w.dir.file("hmm_min4.json"));
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const std::size_t doc_len = gold[i].sentences.size();
      const std::size_t floor = std::min<std::size_t>(4, doc_len);
      for (const Passage& p : file.documents[i].second) {
        CHECK(p.end - p.start + 1 >= floor);
      }
    }
  }

  SUBCASE("hmm smooths fragments that the baseline keeps") {
    // One planted document whose text encodes short interruptions; the
    // baseline must cut at every label change while the boundary model,
    // trained on passages of length >= 2, prefers to absorb them.
    const std::array<EventLabel, 8> planted = {
        EventLabel::Terrorism, EventLabel::Terrorism, EventLabel::Strike,
        EventLabel::Terrorism, EventLabel::Terrorism, EventLabel::Terrorism,
        EventLabel::Strike,    EventLabel::Strike};
    const auto noise = synthetic_noise_words();
    Document doc;
    doc.id = "fuzzy-0";
    for (std::size_t i = 0; i < planted.size(); ++i) {
      std::string first = synthetic_label_word(planted[i], i % 8);
      first[0] = static_cast<char>(std::toupper(first[0]));
      doc.sentences.push_back(Sentence{
          i, first + " " + std::string(noise[i]) + " " +
                 synthetic_label_word(planted[i], (i + 1) % 8) + "."});
    }
    const auto fuzzy = w.dir.file("fuzzy.jsonl");
    save_corpus(std::vector<Document>{doc}, fuzzy);

    const auto base_run =
        run_cli({"segment", "--model", w.model.string(), "--in",
                 fuzzy.string(), "--mode", "baseline", "--out",
                 w.dir.file("fuzzy_base.json").string()});
    REQUIRE(base_run.code == 0);
    const auto hmm_run =
        run_cli({"segment", "--model", w.model.string(), "--table",
                 w.table.string(), "--in", fuzzy.string(), "--mode", "hmm",
                 "--out", w.dir.file("fuzzy_hmm.json").string()});
    REQUIRE(hmm_run.code == 0);

    const SegmentFile base = read_segment_file(w.dir.file("fuzzy_base.json"));
    const SegmentFile hmm = read_segment_file(w.dir.file("fuzzy_hmm.json"));
    REQUIRE(base.labels.at("fuzzy-0") ==
            std::vector<EventLabel>(planted.begin(), planted.end()));
    CHECK(base.documents[0].second.size() == 4);
    CHECK(base.documents[0].second != hmm.documents[0].second);
    CHECK(hmm.documents[0].second.size() < 4);
  }

  SUBCASE("hmm mode requires a boundary table") {
    CHECK(run_cli({"segment", "--model", w.model.string(), "--in",
                   w.test_corpus.string(), "--mode", "hmm", "--out",
                   w.dir.file("x.json").string()})
              .code == 2);
  }

  SUBCASE("an unknown mode is a contract violation") {
    CHECK(run_cli({"segment", "--model", w.model.string(), "--in",
                   w.test_corpus.string(), "--mode", "zigzag", "--out",
                   w.dir.file("x.json").string()})
              .code == 2);
  }
}

TEST_CASE("evaluate reproduces the library metrics in its report") {
  Workspace& w = ws();
  const auto cfg = w.dir.write("eval.cfg", "eval.ndcg_cutoff = 5\n");
  const auto report_path = w.dir.file("report.json");
  const auto r = run_cli({"evaluate", "--pred", w.pred.string(), "--gold",
                          w.test_corpus.string(), "--passages",
                          w.baseline_out.string(), "--passages",
                          w.hmm_out.string(), "--config", cfg.string(),
                          "--out", report_path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("weighted P/R/F1 ") != std::string::npos);
  CHECK(r.out.find("mean ndcg@5 ") != std::string::npos);
  CHECK(r.out.find("bcubed[baseline] P/R/F1 ") != std::string::npos);
  CHECK(r.out.find("bcubed[hmm] P/R/F1 ") != std::string::npos);
  CHECK(r.out.find("report -> ") != std::string::npos);

  const ordered_json report = ordered_json::parse(slurp(report_path));
  CHECK(report.at("version").get<int>() == 1);

  const auto predictions = read_predictions(w.pred);
  const auto gold = load_corpus(w.test_corpus);
  REQUIRE(predictions.size() == gold.size());
  CHECK(report.at("documents").get<std::size_t>() == gold.size());

  std::vector<EventLabel> pred_flat;
  std::vector<EventLabel> gold_flat;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    pred_flat.insert(pred_flat.end(), predictions[i].doc.gold_labels->begin(),
                     predictions[i].doc.gold_labels->end());
    gold_flat.insert(gold_flat.end(), gold[i].gold_labels->begin(),
                     gold[i].gold_labels->end());
  }
  CHECK(report.at("sentences").get<std::size_t>() == gold_flat.size());

  const PRF1Report prf = prf1(pred_flat, gold_flat);
  const auto& weighted = report.at("prf1").at("weighted_avg");
  CHECK(weighted.at("precision").get<double>() ==
        doctest::Approx(prf.weighted_precision).epsilon(1e-12));
  CHECK(weighted.at("recall").get<double>() ==
        doctest::Approx(prf.weighted_recall).epsilon(1e-12));
  CHECK(weighted.at("f1").get<double>() ==
        doctest::Approx(prf.weighted_f1).epsilon(1e-12));
  const auto& per_class = report.at("prf1").at("per_class");
  REQUIRE(per_class.size() == kLabelCount);
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const auto& row = per_class[c];
    CHECK(row.at("label").get<std::string>() ==
          std::string(label_name(label_from_index(c))));
    CHECK(row.at("precision").get<double>() ==
          doctest::Approx(prf.per_class[c].precision).epsilon(1e-12));
    CHECK(row.at("recall").get<double>() ==
          doctest::Approx(prf.per_class[c].recall).epsilon(1e-12));
    CHECK(row.at("f1").get<double>() ==
          doctest::Approx(prf.per_class[c].f1).epsilon(1e-12));
    CHECK(row.at("support").get<std::size_t>() == prf.per_class[c].support);
  }

  // The gold corpus carries no vote scores, so gains are one-hot on the gold
  // label; the prediction file carries score rows, so the ranking sorts all
  // labels by score with canonical order breaking ties.
  double ndcg_sum = 0.0;
  std::array<double, kLabelCount> class_sum{};
  std::array<std::size_t, kLabelCount> class_count{};
  std::size_t sentence_cursor = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t s = 0; s < gold[i].sentences.size(); ++s) {
      RankedLabels ranked;
      ranked.gains = {};
      ranked.gains[label_index((*gold[i].gold_labels)[s])] = 1.0;
      auto order = all_labels();
      const auto& row = predictions[i].scores[s];
      std::stable_sort(order.begin(), order.end(),
                       [&row](EventLabel a, EventLabel b) {
                         return row[label_index(a)] > row[label_index(b)];
                       });
      ranked.labels.assign(order.begin(), order.end());
      const double value = ndcg(ranked, 5);
      ndcg_sum += value;
      const std::size_t c = label_index((*gold[i].gold_labels)[s]);
      class_sum[c] += value;
      ++class_count[c];
      ++sentence_cursor;
    }
  }
  const auto& ndcg_json = report.at("ndcg");
  CHECK(ndcg_json.at("cutoff").get<std::size_t>() == 5);
  CHECK(ndcg_json.at("mean").get<double>() ==
        doctest::Approx(ndcg_sum / static_cast<double>(sentence_cursor))
            .epsilon(1e-12));
  const auto& ndcg_classes = ndcg_json.at("per_class");
  REQUIRE(ndcg_classes.size() == kLabelCount);
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const auto& row = ndcg_classes[c];
    CHECK(row.at("sentences").get<std::size_t>() == class_count[c]);
    const double expected =
        class_count[c] == 0
            ? 0.0
            : class_sum[c] / static_cast<double>(class_count[c]);
    CHECK(row.at("ndcg").get<double>() ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  const auto& bcubed_json = report.at("bcubed");
  REQUIRE(bcubed_json.size() == 2);
  for (const auto* path : {&w.baseline_out, &w.hmm_out}) {
    const SegmentFile file = read_segment_file(*path);
    BCubedTotals totals;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      totals.add(file.documents[i].second, *gold[i].gold_passages,
                 gold[i].sentences.size());
    }
    const BCubedScore expected = totals.score();
    const auto& row = bcubed_json.at(file.mode);
    CHECK(row.at("precision").get<double>() ==
          doctest::Approx(expected.precision).epsilon(1e-12));
    CHECK(row.at("recall").get<double>() ==
          doctest::Approx(expected.recall).epsilon(1e-12));
    CHECK(row.at("f1").get<double>() ==
          doctest::Approx(expected.f1).epsilon(1e-12));
    CHECK(row.at("documents").get<std::size_t>() == gold.size());
  }
}

TEST_CASE("evaluate scores a corpus against itself perfectly") {
  Workspace& w = ws();
  const auto report_path = w.dir.file("self_report.json");
  const auto r =
      run_cli({"evaluate", "--pred", w.test_corpus.string(), "--gold",
               w.test_corpus.string(), "--out", report_path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("weighted P/R/F1 1.000000/1.000000/1.000000") !=
        std::string::npos);

  const ordered_json report = ordered_json::parse(slurp(report_path));
  CHECK(report.at("prf1").at("weighted_avg").at("f1").get<double>() == 1.0);
  CHECK(report.at("ndcg").at("mean").get<double>() == 1.0);
  // Both sides carry gold passages, so the implicit entry is present and
  // perfect.
  const auto& pred_entry = report.at("bcubed").at("pred");
  CHECK(pred_entry.at("precision").get<double>() == 1.0);
  CHECK(pred_entry.at("recall").get<double>() == 1.0);
  CHECK(pred_entry.at("f1").get<double>() == 1.0);
  CHECK(pred_entry.at("documents").get<std::size_t>() == 8);
}

TEST_CASE("evaluate validates its inputs") {
  Workspace& w = ws();
  const auto gold = load_corpus(w.test_corpus);

  SUBCASE("corpus size mismatch") {
    std::vector<Document> shorter(gold.begin(), gold.end() - 1);
    const auto path = w.dir.file("short.jsonl");
    save_corpus(shorter, path);
    CHECK(run_cli({"evaluate", "--pred", path.string(), "--gold",
                   w.test_corpus.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("document id mismatch") {
    auto renamed = gold;
    renamed[0].id = "other-000";
    const auto path = w.dir.file("renamed.jsonl");
    save_corpus(renamed, path);
    CHECK(run_cli({"evaluate", "--pred", path.string(), "--gold",
                   w.test_corpus.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("sentence count mismatch") {
    auto padded = gold;
    padded[0].sentences.push_back(
        Sentence{padded[0].sentences.size(), "One more sentence."});
    padded[0].gold_labels->push_back(EventLabel::NoneOfAbove);
    padded[0].gold_passages.reset();  // keep the document self-consistent
    const auto path = w.dir.file("padded.jsonl");
    save_corpus(padded, path);
    CHECK(run_cli({"evaluate", "--pred", path.string(), "--gold",
                   w.test_corpus.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("a prediction document without labels") {
    auto bare = gold;
    bare[0].gold_labels.reset();
    const auto path = w.dir.file("bare_pred.jsonl");
    save_corpus(bare, path);
    CHECK(run_cli({"evaluate", "--pred", path.string(), "--gold",
                   w.test_corpus.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("two passage files with the same mode") {
    CHECK(run_cli({"evaluate", "--pred", w.pred.string(), "--gold",
                   w.test_corpus.string(), "--passages",
                   w.baseline_out.string(), "--passages",
                   w.baseline_out.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("a passages file missing a document") {
    ordered_json trimmed = ordered_json::parse(slurp(w.baseline_out));
    trimmed["documents"].erase(0);
    const auto path = w.dir.file("trimmed.json");
    w.dir.write("trimmed.json", trimmed.dump(2));
    CHECK(run_cli({"evaluate", "--pred", w.pred.string(), "--gold",
                   w.test_corpus.string(), "--passages", path.string(),
                   "--out", w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("a passages file for an unknown document") {
    ordered_json extra = ordered_json::parse(slurp(w.baseline_out));
    ordered_json ghost = extra["documents"][0];
    ghost["id"] = "zzz-999";
    extra["documents"].push_back(ghost);
    const auto path = w.dir.file("extra.json");
    w.dir.write("extra.json", extra.dump(2));
    CHECK(run_cli({"evaluate", "--pred", w.pred.string(), "--gold",
                   w.test_corpus.string(), "--passages", path.string(),
                   "--out", w.dir.file("r.json").string()})
              .code == 2);
  }

  SUBCASE("a corrupt passages file is a version error") {
    const auto path = w.dir.write("mangled.json", "this is not json");
    CHECK(run_cli({"evaluate", "--pred", w.pred.string(), "--gold",
                   w.test_corpus.string(), "--passages", path.string(),
                   "--out", w.dir.file("r.json").string()})
              .code == 4);
  }

  SUBCASE("a missing prediction file is an io error") {
    CHECK(run_cli({"evaluate", "--pred", w.dir.file("ghost.jsonl").string(),
                   "--gold", w.test_corpus.string(), "--out",
                   w.dir.file("r.json").string()})
              .code == 3);
  }
}

TEST_CASE("aggregate filters bad hits and reports consensus") {
  TempDir dir;
  const auto corpus = dir.file("base.jsonl");
  save_corpus(std::vector<Document>{make_doc("d1", 2)}, corpus);
  const auto cfg = dir.write("crowd.cfg", "crowd.expected_per_hit = 2\n");

  std::string csv = annotation_header();
  for (int i = 1; i <= 4; ++i) {
    const std::string worker = "w" + std::to_string(i);
    const std::string hit = "h" + std::to_string(i);
    csv += annotation_row(worker, hit, "d1", 0, "terrorism", 30);
    csv += annotation_row(worker, hit, "d1", 1, "terrorism", 30);
  }
  csv += annotation_row("w5", "h5", "d1", 0, "suicide_bombing", 30);
  csv += annotation_row("w5", "h5", "d1", 1, "suicide_bombing", 30);
  const auto ann = dir.write("ann.csv", csv);

  const auto gold_path = dir.file("gold.jsonl");
  const auto r = run_cli({"aggregate", "--annotations", ann.string(),
                          "--corpus", corpus.string(), "--config",
                          cfg.string(), "--out", gold_path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kept 8 of 10 records; rejected 1 hits -> ") !=
        std::string::npos);
  CHECK(r.out.find("fleiss kappa 1.000000 over 2 sentences (4 raters each, "
                   "0 skipped)") != std::string::npos);
  CHECK(r.out.find("gold corpus (1 documents, unweighted scoring) -> ") !=
        std::string::npos);

  CHECK(slurp(dir.file("gold.rejections.csv")) ==
        "hit_id,worker_id,reason_code\nh5,w5,RANDOM\n");

  const auto gold_docs = load_corpus(gold_path);
  REQUIRE(gold_docs.size() == 1);
  REQUIRE(gold_docs[0].gold_labels.has_value());
  CHECK(*gold_docs[0].gold_labels ==
        std::vector<EventLabel>{EventLabel::Terrorism, EventLabel::Terrorism});
  REQUIRE(gold_docs[0].gold_passages.has_value());
  REQUIRE(gold_docs[0].gold_passages->size() == 1);
  CHECK((*gold_docs[0].gold_passages)[0].start == 0);
  CHECK((*gold_docs[0].gold_passages)[0].end == 1);
  CHECK((*gold_docs[0].gold_passages)[0].label == EventLabel::Terrorism);

  const ordered_json line = ordered_json::parse(slurp(gold_path).substr(
      0, slurp(gold_path).find('\n')));
  REQUIRE(line.contains("scores"));
  REQUIRE(line["scores"].size() == 2);
  CHECK(line["scores"][0][0].get<double>() == 4.0);
  CHECK(line["scores"][0][1].get<double>() == 0.0);

  SUBCASE("--rejections overrides the derived path") {
    const auto custom = dir.file("why.csv");
    REQUIRE(run_cli({"aggregate", "--annotations", ann.string(), "--corpus",
                     corpus.string(), "--config", cfg.string(), "--out",
                     dir.file("gold2.jsonl").string(), "--rejections",
                     custom.string()})
                .code == 0);
    CHECK(slurp(custom) == "hit_id,worker_id,reason_code\nh5,w5,RANDOM\n");
    CHECK(!std::filesystem::exists(dir.file("gold2.rejections.csv")));
  }
}

TEST_CASE("aggregate weighting flips contested sentences") {
  TempDir dir;
  const auto corpus = dir.file("base.jsonl");
  save_corpus(std::vector<Document>{make_doc("d1", 2)}, corpus);
  const auto cfg = dir.write("crowd.cfg", "crowd.expected_per_hit = 2\n");
  const auto profiles = dir.write("profiles.csv",
                                  "worker_id,accepted,total\n"
                                  "u,9,10\n"
                                  "p,3,10\n"
                                  "q,3,10\n");

  std::string csv = annotation_header();
  csv += annotation_row("u", "hu", "d1", 0, "terrorism", 30);
  csv += annotation_row("u", "hu", "d1", 1, "terrorism", 30);
  csv += annotation_row("p", "hp", "d1", 0, "suicide_bombing", 30);
  csv += annotation_row("p", "hp", "d1", 1, "terrorism", 30);
  csv += annotation_row("q", "hq", "d1", 0, "suicide_bombing", 30);
  csv += annotation_row("q", "hq", "d1", 1, "terrorism", 30);
  const auto ann = dir.write("ann.csv", csv);

  const auto unweighted_path = dir.file("unweighted.jsonl");
  const auto u = run_cli({"aggregate", "--annotations", ann.string(),
                          "--profiles", profiles.string(), "--corpus",
                          corpus.string(), "--config", cfg.string(), "--out",
                          unweighted_path.string()});
  REQUIRE(u.code == 0);
  CHECK(u.out.find("fleiss kappa 0.250000 over 2 sentences (3 raters each, "
                   "0 skipped)") != std::string::npos);

  const auto weighted_path = dir.file("weighted.jsonl");
  const auto v = run_cli({"aggregate", "--annotations", ann.string(),
                          "--profiles", profiles.string(), "--corpus",
                          corpus.string(), "--mode", "weighted", "--config",
                          cfg.string(), "--out", weighted_path.string()});
  REQUIRE(v.code == 0);
  CHECK(v.out.find("weighted scoring") != std::string::npos);

  const auto by_votes = load_corpus(unweighted_path);
  const auto by_weight = load_corpus(weighted_path);
  REQUIRE(by_votes.size() == 1);
  REQUIRE(by_weight.size() == 1);
  CHECK(*by_votes[0].gold_labels ==
        std::vector<EventLabel>{EventLabel::SuicideBombing,
                                EventLabel::Terrorism});
  CHECK(*by_weight[0].gold_labels ==
        std::vector<EventLabel>{EventLabel::Terrorism, EventLabel::Terrorism});
  REQUIRE(by_weight[0].gold_passages->size() == 1);
  CHECK(by_votes[0].gold_passages->size() == 2);

  // Weighted score mass on the contested sentence: one accept-rate 0.9
  // worker against two accept-rate 0.3 workers.
  const std::string weighted_line =
      slurp(weighted_path).substr(0, slurp(weighted_path).find('\n'));
  const ordered_json parsed = ordered_json::parse(weighted_line);
  CHECK(parsed["scores"][0][0].get<double>() == 0.9);
  CHECK(parsed["scores"][0][1].get<double>() == 0.6);
}

TEST_CASE("aggregate edge cases") {
  TempDir dir;
  const auto corpus = dir.file("base.jsonl");
  save_corpus(std::vector<Document>{make_doc("d1", 2)}, corpus);

  SUBCASE("a single rater leaves kappa undefined but exports gold") {
    const auto cfg = dir.write("crowd.cfg", "crowd.expected_per_hit = 2\n");
    std::string csv = annotation_header();
    csv += annotation_row("u", "h1", "d1", 0, "strike", 20);
    csv += annotation_row("u", "h1", "d1", 1, "strike", 20);
    const auto ann = dir.write("solo.csv", csv);
    const auto r = run_cli({"aggregate", "--annotations", ann.string(),
                            "--corpus", corpus.string(), "--config",
                            cfg.string(), "--out",
                            dir.file("gold.jsonl").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("fleiss kappa not computable: no sentence has two "
                     "raters") != std::string::npos);
    const auto gold_docs = load_corpus(dir.file("gold.jsonl"));
    CHECK(*gold_docs[0].gold_labels ==
          std::vector<EventLabel>{EventLabel::Strike, EventLabel::Strike});
  }

  SUBCASE("an uncovered sentence is a contract violation") {
    const auto cfg = dir.write("one.cfg", "crowd.expected_per_hit = 1\n");
    std::string csv = annotation_header();
    csv += annotation_row("u", "h1", "d1", 0, "strike", 20);
    const auto ann = dir.write("gap.csv", csv);
    CHECK(run_cli({"aggregate", "--annotations", ann.string(), "--corpus",
                   corpus.string(), "--config", cfg.string(), "--out",
                   dir.file("gold.jsonl").string()})
              .code == 2);
  }

  SUBCASE("an unknown scoring mode is a contract violation") {
    std::string csv = annotation_header();
    csv += annotation_row("u", "h1", "d1", 0, "strike", 20);
    const auto ann = dir.write("one.csv", csv);
    CHECK(run_cli({"aggregate", "--annotations", ann.string(), "--corpus",
                   corpus.string(), "--mode", "plurality", "--out",
                   dir.file("gold.jsonl").string()})
              .code == 2);
  }

  SUBCASE("a missing annotations file is an io error") {
    CHECK(run_cli({"aggregate", "--annotations",
                   dir.file("ghost.csv").string(), "--corpus", corpus.string(),
                   "--out", dir.file("gold.jsonl").string()})
              .code == 3);
  }
}

}  // TEST_SUITE("cli")
