#include "nep/synth.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nep/errors.hpp"
#include "nep/rng.hpp"

namespace nep {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 40> kNoiseWords = {
    "the",  "of",    "and",  "a",    "in",   "to",    "is",   "was",
    "for",  "on",    "that", "with", "as",   "at",    "by",   "from",
    "it",   "an",    "be",   "are",  "were", "this",  "which", "or",
    "but",  "not",   "his",  "her",  "their", "its",  "has",  "had",
    "have", "will",  "would", "been", "one",  "two",  "all",  "also",
};

std::string label_word_base(EventLabel label) {
  std::string base;
  for (char c : label_name(label)) {
    if (c != '_') base.push_back(c);
  }
  return base;
}

std::size_t range_draw(Rng& rng,
                       const std::pair<std::size_t, std::size_t>& range) {
  return range.first + rng.below(range.second - range.first + 1);
}

void check_range(const std::pair<std::size_t, std::size_t>& range,
                 std::string_view what) {
  if (range.first < 1 || range.first > range.second) {
    throw ContractError("synthetic spec: " + std::string(what) +
                        " must satisfy 1 <= min <= max");
  }
}

std::pair<std::size_t, std::size_t> range_from_json(const ordered_json& j,
                                                    std::string_view what) {
  if (!j.is_array() || j.size() != 2) {
    throw ContractError("synthetic spec: " + std::string(what) +
                        " must be a [min, max] pair");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace

std::span<const std::string_view> synthetic_noise_words() {
  return kNoiseWords;
}

std::string synthetic_label_word(EventLabel label, std::size_t index) {
  return label_word_base(label) + "w" + std::to_string(index);
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_docs < 1) {
    throw ContractError("synthetic spec: n_docs must be >= 1");
  }
  if (spec.vocab_per_label < 1) {
    throw ContractError("synthetic spec: vocab_per_label must be >= 1");
  }
  check_range(spec.passage_length_range, "passage_length_range");
  check_range(spec.passages_per_doc_range, "passages_per_doc_range");
  check_range(spec.sentence_length_range, "sentence_length_range");
  if (spec.content_density <= 0.0 || spec.content_density > 1.0) {
    throw ContractError("synthetic spec: content_density must be in (0,1]");
  }
  if (spec.label_noise < 0.0 || spec.label_noise >= 1.0) {
    throw ContractError("synthetic spec: label_noise must be in [0,1)");
  }
  std::set<EventLabel> distinct(spec.labels.begin(), spec.labels.end());
  if (distinct.size() != spec.labels.size()) {
    throw ContractError("synthetic spec: duplicate labels");
  }
  if (!spec.labels.empty() && spec.labels.size() < 2) {
    if (spec.label_noise > 0.0) {
      throw ContractError(
          "synthetic spec: label_noise needs at least two labels");
    }
    if (spec.adjacent_distinct &&
        spec.passages_per_doc_range.second > 1) {
      throw ContractError(
          "synthetic spec: adjacent_distinct needs at least two labels");
    }
  }
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);
  std::vector<EventLabel> labels = spec.labels;
  if (labels.empty()) {
    labels = {EventLabel::Terrorism, EventLabel::SuicideBombing,
              EventLabel::SexAbuse, EventLabel::ManagementChanges};
  }
  const std::size_t k = labels.size();

  std::size_t id_width = 1;
  for (std::size_t v = spec.n_docs - 1; v >= 10; v /= 10) ++id_width;

  SyntheticCorpus corpus;
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    Rng rng(mix_seed(spec.seed, 0x53594eull * 1000 + d));

    std::vector<EventLabel> plan;  // one gold label per sentence
    std::vector<Passage> passages;
    const std::size_t n_passages =
        range_draw(rng, spec.passages_per_doc_range);
    std::size_t previous = k;  // out of range = no previous passage
    for (std::size_t p = 0; p < n_passages; ++p) {
      std::size_t pick;
      if (spec.adjacent_distinct && previous < k && k > 1) {
        pick = rng.below(k - 1);
        if (pick >= previous) ++pick;
      } else {
        pick = rng.below(k);
      }
      previous = pick;
      const std::size_t length = range_draw(rng, spec.passage_length_range);
      passages.push_back(Passage{plan.size(), plan.size() + length - 1,
                                 labels[pick]});
      plan.insert(plan.end(), length, labels[pick]);
    }

    Document doc;
    std::string id = std::to_string(d);
    if (id.size() < id_width) {
      id.insert(0, id_width - id.size(), '0');
    }
    doc.id = "synth-" + id;
    for (std::size_t s = 0; s < plan.size(); ++s) {
      const std::size_t n_tokens = range_draw(rng, spec.sentence_length_range);
      std::string text;
      for (std::size_t t = 0; t < n_tokens; ++t) {
        // The first token is always a content word, so no sentence is pure
        // filler.
        const bool content = t == 0 || rng.unit() < spec.content_density;
        std::string word =
            content
                ? synthetic_label_word(plan[s], rng.below(spec.vocab_per_label))
                : std::string(kNoiseWords[rng.below(kNoiseWords.size())]);
        if (t == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
        if (t > 0) text.push_back(' ');
        text += word;
      }
      text.push_back('.');
      doc.sentences.push_back(Sentence{s, std::move(text)});
    }

    std::vector<EventLabel> noisy = plan;
    if (spec.label_noise > 0.0 && k > 1) {
      for (std::size_t s = 0; s < noisy.size(); ++s) {
        if (rng.unit() >= spec.label_noise) continue;
        std::size_t current = k;
        for (std::size_t c = 0; c < k; ++c) {
          if (labels[c] == noisy[s]) {
            current = c;
            break;
          }
        }
        std::size_t pick = rng.below(k - 1);
        if (pick >= current) ++pick;
        noisy[s] = labels[pick];
      }
    }

    doc.gold_labels = noisy;
    doc.gold_passages = passages;
    validate_document(doc);
    corpus.documents.push_back(std::move(doc));
    corpus.pre_noise_labels.push_back(std::move(plan));
  }
  return corpus;
}

SyntheticSpec parse_synthetic_spec(std::string_view text,
                                   std::string_view name) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw ContractError(std::string(name) +
                        ": spec is not valid JSON: " + e.what());
  }
  if (!j.is_object()) {
    throw ContractError(std::string(name) + ": spec must be a JSON object");
  }

  SyntheticSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_docs") {
        spec.n_docs = value.get<std::size_t>();
      } else if (key == "labels") {
        spec.labels.clear();
        for (const auto& entry : value) {
          spec.labels.push_back(require_label(entry.get<std::string>()));
        }
      } else if (key == "vocab_per_label") {
        spec.vocab_per_label = value.get<std::size_t>();
      } else if (key == "passage_length_range") {
        spec.passage_length_range = range_from_json(value, key);
      } else if (key == "passages_per_doc_range") {
        spec.passages_per_doc_range = range_from_json(value, key);
      } else if (key == "sentence_length_range") {
        spec.sentence_length_range = range_from_json(value, key);
      } else if (key == "content_density") {
        spec.content_density = value.get<double>();
      } else if (key == "label_noise") {
        spec.label_noise = value.get<double>();
      } else if (key == "adjacent_distinct") {
        spec.adjacent_distinct = value.get<bool>();
      } else if (key == "seed") {
        spec.seed = value.get<std::uint64_t>();
      } else {
        throw ContractError(std::string(name) + ": unknown spec key '" + key +
                            "'");
      }
    }
  } catch (const ordered_json::exception& e) {
    throw ContractError(std::string(name) +
                        ": mistyped spec field: " + e.what());
  }
  validate_spec(spec);
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open synthetic spec: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_synthetic_spec(buffer.str(), path.string());
}

}  // namespace nep
