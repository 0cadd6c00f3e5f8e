#include "nep/pipeline.hpp"

#include <utility>

#include "nep/errors.hpp"
#include "nep/text.hpp"

namespace nep {
namespace {

std::set<std::string> load_optional_list(const std::string& path,
                                         std::string_view what) {
  if (path.empty()) return {};
  try {
    return load_word_list(path);
  } catch (const IoError& e) {
    throw IoError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

FeatureResources load_resources(const PipelineConfig& config) {
  FeatureResources resources;
  resources.stopwords = load_optional_list(config.stopwords_path, "stopwords");
  resources.gazetteer.person_names =
      load_optional_list(config.person_names_path, "person names");
  resources.gazetteer.place_names =
      load_optional_list(config.place_names_path, "place names");
  resources.gazetteer.org_markers =
      load_optional_list(config.org_markers_path, "organization markers");
  resources.verb_lexicon =
      load_optional_list(config.verb_lexicon_path, "verb lexicon");
  resources.abbreviations =
      load_optional_list(config.abbreviations_path, "abbreviations");
  return resources;
}

Vocabulary build_corpus_vocabulary(std::span<const Document> docs,
                                   const PipelineConfig& config,
                                   const FeatureResources& resources) {
  const Vocabulary corpus_stats = build_token_stats(docs);
  std::set<std::string> phrase_set;
  for (const Document& doc : docs) {
    auto phrases = extract_keyphrases(doc, corpus_stats,
                                      config.keyphrases_per_doc,
                                      resources.stopwords);
    phrases = filter_entities(std::move(phrases), resources.gazetteer);
    for (const Phrase& phrase : phrases) {
      phrase_set.insert(phrase.joined());
    }
  }
  const auto verbs = collect_action_verbs(docs, resources.verb_lexicon);
  return build_vocabulary(phrase_set, verbs);
}

TrainedArtifacts train_pipeline(std::span<const Document> docs,
                                const PipelineConfig& config,
                                const FeatureResources& resources,
                                TrainStats* stats) {
  if (docs.empty()) {
    throw ContractError("training corpus is empty");
  }
  for (const Document& doc : docs) {
    if (!doc.gold_labels) {
      throw ContractError("training document '" + doc.id +
                          "' has no gold_labels");
    }
  }

  Vocabulary vocab = build_corpus_vocabulary(docs, config, resources);
  if (vocab.size() == 0) {
    throw ContractError(
        "feature extraction produced an empty vocabulary; check the stopword "
        "list and keyphrase budget");
  }

  TrainingSet data;
  for (const Document& doc : docs) {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      data.push_back(TrainingExample{vectorize(doc.sentences[s], vocab),
                                     (*doc.gold_labels)[s]});
    }
  }

  EnsembleOptions options;
  options.alpha = config.alpha;
  options.bag_count = config.bag_count;
  options.max_depth = config.max_depth;
  options.min_leaf = config.min_leaf;
  options.reg_lambda = config.reg_lambda;
  options.epochs = config.epochs;
  options.seed = config.seed;

  TrainedArtifacts artifacts;
  artifacts.model = train_ensemble(data, std::move(vocab), options);

  std::vector<LabeledSequence> sequences;
  for (const Document& doc : docs) {
    if (doc.gold_passages) {
      sequences.push_back(sequence_from_document(doc));
    }
  }
  if (!sequences.empty()) {
    artifacts.table =
        BoundaryContextTable::fit(sequences, config.context_length);
  }

  if (stats != nullptr) {
    stats->documents = docs.size();
    stats->sentences = data.size();
    stats->vocabulary = artifacts.model.vocab.size();
    stats->passage_sequences = sequences.size();
  }
  return artifacts;
}

}  // namespace nep
