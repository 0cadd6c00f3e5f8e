#include "nep/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "nep/text.hpp"

namespace nep {

std::string Phrase::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view feature) const {
  auto it = index.find(feature);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_token_stats(std::span<const Document> docs) {
  std::map<std::string, std::uint32_t> df;
  for (const Document& doc : docs) {
    std::set<std::string> seen;
    for (const Sentence& sentence : doc.sentences) {
      for (std::string& token : tokenize(sentence.text))
        seen.insert(std::move(token));
    }
    for (const std::string& token : seen) ++df[token];
  }
  Vocabulary stats;
  stats.document_count = docs.size();
  for (auto& [token, count] : df) {
    stats.index.emplace(token, static_cast<std::uint32_t>(stats.features.size()));
    stats.features.push_back(token);
    stats.doc_freq.push_back(count);
  }
  return stats;
}

double inverse_doc_freq(const Vocabulary& corpus_stats,
                        std::string_view token) {
  std::uint32_t df = 0;
  if (auto idx = corpus_stats.find(token)) df = corpus_stats.doc_freq[*idx];
  double d = static_cast<double>(corpus_stats.document_count);
  return std::log((d + 1.0) / (df + 1.0)) + 1.0;
}

namespace {

constexpr std::size_t kMaxPhraseTokens = 3;

struct Candidate {
  std::vector<std::string> tokens;
  double score = 0.0;
  std::size_t first_position = 0;  // global token offset of first occurrence
};

}  // namespace

std::vector<Phrase> extract_keyphrases(const Document& doc,
                                       const Vocabulary& corpus_stats,
                                       std::size_t k,
                                       const std::set<std::string>& stopwords) {
  if (k == 0) return {};
  std::vector<std::vector<std::string>> sentence_tokens;
  sentence_tokens.reserve(doc.sentences.size());
  std::unordered_map<std::string, std::uint32_t> tf;
  for (const Sentence& sentence : doc.sentences) {
    sentence_tokens.push_back(tokenize(sentence.text));
    for (const std::string& token : sentence_tokens.back()) ++tf[token];
  }

  std::unordered_map<std::string, double> token_score;
  token_score.reserve(tf.size());
  for (const auto& [token, count] : tf)
    token_score[token] = count * inverse_doc_freq(corpus_stats, token);

  std::map<std::string, Candidate> candidates;
  std::size_t global_offset = 0;
  for (const auto& tokens : sentence_tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (stopwords.count(tokens[i]) > 0) continue;  // stopword at left edge
      double score = 0.0;
      for (std::size_t n = 1; n <= kMaxPhraseTokens && i + n <= tokens.size();
           ++n) {
        score += token_score[tokens[i + n - 1]];
        if (stopwords.count(tokens[i + n - 1]) > 0) continue;  // right edge
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
          key.push_back(' ');
          key += tokens[i + j];
        }
        auto [it, inserted] = candidates.try_emplace(key);
        if (inserted) {
          Candidate& c = it->second;
          c.tokens.assign(tokens.begin() + i, tokens.begin() + i + n);
          c.score = score;
          c.first_position = global_offset + i;
        }
      }
    }
    global_offset += tokens.size();
  }

  std::vector<const std::map<std::string, Candidate>::value_type*> ranked;
  ranked.reserve(candidates.size());
  for (const auto& entry : candidates) ranked.push_back(&entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->second.score != b->second.score)
      return a->second.score > b->second.score;
    if (a->second.first_position != b->second.first_position)
      return a->second.first_position < b->second.first_position;
    return a->first < b->first;
  });

  std::vector<Phrase> phrases;
  phrases.reserve(std::min(k, ranked.size()));
  for (const auto* entry : ranked) {
    if (phrases.size() == k) break;
    phrases.push_back(Phrase{entry->second.tokens, entry->second.score});
  }
  return phrases;
}

std::vector<Phrase> filter_entities(std::vector<Phrase> phrases,
                                    const Gazetteer& gazetteer) {
  auto names_hit = [&](const Phrase& phrase) {
    for (const std::string& token : phrase.tokens) {
      if (gazetteer.person_names.count(token) > 0 ||
          gazetteer.place_names.count(token) > 0) {
        return true;
      }
    }
    std::string whole = phrase.joined();
    return gazetteer.person_names.count(whole) > 0 ||
           gazetteer.place_names.count(whole) > 0;
  };
  auto has_org_marker = [&](const Phrase& phrase) {
    for (const std::string& token : phrase.tokens)
      if (gazetteer.org_markers.count(token) > 0) return true;
    return false;
  };

  std::vector<Phrase> kept;
  kept.reserve(phrases.size());
  for (Phrase& phrase : phrases) {
    if (!names_hit(phrase) || has_org_marker(phrase))
      kept.push_back(std::move(phrase));
  }
  return kept;
}

namespace {

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Base forms a token could inflect from: strip -s/-es/-ed/-ing, undo
// consonant doubling ("stopped" -> "stop"), restore a final e
// ("merged" -> "merge").
std::vector<std::string> stem_candidates(const std::string& token) {
  std::vector<std::string> out;
  out.push_back(token);
  auto add_variants = [&](std::size_t suffix_len, bool restore_e) {
    if (token.size() < suffix_len + 2) return;
    std::string base = token.substr(0, token.size() - suffix_len);
    out.push_back(base);
    if (restore_e) out.push_back(base + "e");
    if (base.size() >= 3 && base[base.size() - 1] == base[base.size() - 2] &&
        !is_vowel(base.back())) {
      out.push_back(base.substr(0, base.size() - 1));
    }
  };
  if (token.ends_with("ing")) add_variants(3, true);
  if (token.ends_with("ed")) add_variants(2, true);
  if (token.ends_with("es")) add_variants(2, false);
  if (token.ends_with("s") && !token.ends_with("ss")) add_variants(1, false);
  return out;
}

}  // namespace

std::set<std::string> collect_action_verbs(
    std::span<const Document> training_docs,
    const std::set<std::string>& verb_lexicon) {
  std::set<std::string> verbs;
  if (verb_lexicon.empty()) return verbs;
  for (const Document& doc : training_docs) {
    for (const Sentence& sentence : doc.sentences) {
      for (const std::string& token : tokenize(sentence.text)) {
        for (const std::string& candidate : stem_candidates(token)) {
          if (verb_lexicon.count(candidate) > 0) verbs.insert(candidate);
        }
      }
    }
  }
  return verbs;
}

Vocabulary build_vocabulary(const std::set<std::string>& phrases,
                            const std::set<std::string>& verbs) {
  std::set<std::string> merged = phrases;
  merged.insert(verbs.begin(), verbs.end());
  Vocabulary vocab;
  for (const std::string& feature : merged) {
    vocab.index.emplace(feature,
                        static_cast<std::uint32_t>(vocab.features.size()));
    vocab.features.push_back(feature);
    vocab.doc_freq.push_back(0);
  }
  return vocab;
}

FeatureVector vectorize(const Sentence& sentence, const Vocabulary& vocab) {
  FeatureVector vec;
  std::vector<std::string> tokens = tokenize(sentence.text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string key;
    for (std::size_t n = 1; n <= kMaxPhraseTokens && i + n <= tokens.size();
         ++n) {
      if (n > 1) key.push_back(' ');
      key += tokens[i + n - 1];
      if (auto idx = vocab.find(key)) ++vec.counts[*idx];
    }
  }
  return vec;
}

}  // namespace nep
