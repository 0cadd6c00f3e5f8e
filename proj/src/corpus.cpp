#include "nep/corpus.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

#include "nep/errors.hpp"
#include "nep/text.hpp"

namespace nep {

using ordered_json = nlohmann::ordered_json;

void validate_tiling(std::span<const Passage> passages, std::size_t n_sentences,
                     std::string_view what) {
  std::string who(what);
  if (n_sentences == 0) {
    if (!passages.empty())
      throw ContractError(who + ": passages given for empty sentence range");
    return;
  }
  if (passages.empty())
    throw ContractError(who + ": no passages cover sentences 0.." +
                        std::to_string(n_sentences - 1));
  std::size_t expected_start = 0;
  for (const Passage& p : passages) {
    if (p.start > p.end || p.end >= n_sentences)
      throw ContractError(who + ": passage (" + std::to_string(p.start) + "," +
                          std::to_string(p.end) + ") out of range");
    if (p.start != expected_start)
      throw ContractError(
          who + ": passages must tile the document; expected start " +
          std::to_string(expected_start) + " but got " +
          std::to_string(p.start));
    expected_start = p.end + 1;
  }
  if (expected_start != n_sentences)
    throw ContractError(who + ": passages end at " +
                        std::to_string(expected_start - 1) +
                        " but the document has " +
                        std::to_string(n_sentences) + " sentences");
}

void validate_document(const Document& doc) {
  const std::string who = "document '" + doc.id + "'";
  if (doc.id.empty()) throw ContractError("document with empty id");
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    const Sentence& s = doc.sentences[i];
    if (s.index != i)
      throw ContractError(who + ": sentence indices must be contiguous from 0");
    if (trim(s.text).empty())
      throw ContractError(who + ": sentence " + std::to_string(i) +
                          " is empty");
  }
  if (doc.gold_labels && doc.gold_labels->size() != doc.sentences.size())
    throw ContractError(who + ": gold_labels has " +
                        std::to_string(doc.gold_labels->size()) +
                        " entries for " +
                        std::to_string(doc.sentences.size()) + " sentences");
  if (doc.gold_passages)
    validate_tiling(*doc.gold_passages, doc.sentences.size(),
                    who + " gold_passages");
}

namespace {

ordered_json passage_to_json(const Passage& p) {
  ordered_json j;
  j["start"] = p.start;
  j["end"] = p.end;
  j["label"] = std::string(label_name(p.label));
  return j;
}

Passage passage_from_json(const ordered_json& j) {
  Passage p;
  p.start = j.at("start").get<std::size_t>();
  p.end = j.at("end").get<std::size_t>();
  p.label = require_label(j.at("label").get<std::string>());
  return p;
}

}  // namespace

std::string document_to_json_line(const Document& doc) {
  ordered_json j;
  j["id"] = doc.id;
  j["sentences"] = ordered_json::array();
  for (const Sentence& s : doc.sentences) j["sentences"].push_back(s.text);
  if (doc.gold_labels) {
    ordered_json labels = ordered_json::array();
    for (EventLabel label : *doc.gold_labels)
      labels.push_back(std::string(label_name(label)));
    j["gold_labels"] = std::move(labels);
  }
  if (doc.gold_passages) {
    ordered_json passages = ordered_json::array();
    for (const Passage& p : *doc.gold_passages)
      passages.push_back(passage_to_json(p));
    j["gold_passages"] = std::move(passages);
  }
  return j.dump();
}

Document document_from_json_line(std::string_view line) {
  ordered_json j = ordered_json::parse(line);
  Document doc;
  doc.id = j.at("id").get<std::string>();
  std::size_t index = 0;
  for (const auto& s : j.at("sentences")) {
    doc.sentences.push_back(Sentence{index++, s.get<std::string>()});
  }
  if (j.contains("gold_labels")) {
    std::vector<EventLabel> labels;
    for (const auto& name : j["gold_labels"])
      labels.push_back(require_label(name.get<std::string>()));
    doc.gold_labels = std::move(labels);
  }
  if (j.contains("gold_passages")) {
    std::vector<Passage> passages;
    for (const auto& p : j["gold_passages"])
      passages.push_back(passage_from_json(p));
    doc.gold_passages = std::move(passages);
  }
  validate_document(doc);
  return doc;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(document_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw ContractError(path.string() + ":" + std::to_string(line_number) +
                          ": malformed JSON record: " + e.what());
    } catch (const ContractError& e) {
      throw ContractError(path.string() + ":" + std::to_string(line_number) +
                          ": " + e.what());
    }
  }
  return docs;
}

void save_corpus(std::span<const Document> docs,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw IoError("cannot write corpus file: " + path.string());
  for (const Document& doc : docs) out << document_to_json_line(doc) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// The whitespace-delimited word ending at `pos` (inclusive), lowercased.
// For "met Mr. Smith" with pos at the '.', returns "mr.".
std::string word_ending_at(std::string_view text, std::size_t pos) {
  std::size_t begin = pos;
  while (begin > 0 &&
         !std::isspace(static_cast<unsigned char>(text[begin - 1]))) {
    --begin;
  }
  return to_lower(text.substr(begin, pos - begin + 1));
}

}  // namespace

std::vector<Sentence> split_sentences(
    std::string_view text, const std::set<std::string>& abbreviations) {
  std::vector<Sentence> sentences;
  auto emit = [&](std::string_view piece) {
    std::string_view trimmed = trim(piece);
    if (!trimmed.empty())
      sentences.push_back(Sentence{sentences.size(), std::string(trimmed)});
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    // Swallow a run of terminal punctuation ("?!", "...").
    std::size_t punct_end = i;
    while (punct_end + 1 < text.size() && is_terminal(text[punct_end + 1]))
      ++punct_end;

    std::size_t after = punct_end + 1;
    bool at_end = after >= text.size();
    bool boundary = at_end;
    if (!at_end && std::isspace(static_cast<unsigned char>(text[after]))) {
      std::size_t next = after;
      while (next < text.size() &&
             std::isspace(static_cast<unsigned char>(text[next]))) {
        ++next;
      }
      if (next >= text.size()) {
        boundary = true;
      } else if (std::isupper(static_cast<unsigned char>(text[next]))) {
        boundary = true;
        // A single '.' may close an abbreviation rather than a sentence.
        if (text[i] == '.' && punct_end == i &&
            abbreviations.count(word_ending_at(text, i)) > 0) {
          boundary = false;
        }
      }
    }

    if (boundary) {
      emit(text.substr(start, punct_end + 1 - start));
      start = after;
    }
    i = punct_end + 1;
  }
  if (start < text.size()) emit(text.substr(start));
  return sentences;
}

}  // namespace nep
