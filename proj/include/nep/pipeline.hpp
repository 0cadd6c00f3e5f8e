#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>

#include "nep/classify.hpp"
#include "nep/config.hpp"
#include "nep/corpus.hpp"
#include "nep/features.hpp"
#include "nep/segment.hpp"

namespace nep {

// Word lists behind the feature extractors; an empty path in the config
// yields an empty set.
struct FeatureResources {
  std::set<std::string> stopwords;
  Gazetteer gazetteer;
  std::set<std::string> verb_lexicon;
  std::set<std::string> abbreviations;
};

FeatureResources load_resources(const PipelineConfig& config);

struct TrainStats {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::size_t vocabulary = 0;
  std::size_t passage_sequences = 0;  // docs that contributed to the table
};

struct TrainedArtifacts {
  EnsembleModel model;
  // Fitted only when at least one document carries gold passages.
  std::optional<BoundaryContextTable> table;
};

// Keyphrase + verb features over the corpus, then all three classifiers and
// (when passages exist) the boundary table. Every document needs
// gold_labels.
TrainedArtifacts train_pipeline(std::span<const Document> docs,
                                const PipelineConfig& config,
                                const FeatureResources& resources,
                                TrainStats* stats = nullptr);

// The feature half of train_pipeline, reused when classifying: builds the
// vocabulary a corpus induces under the given resources.
Vocabulary build_corpus_vocabulary(std::span<const Document> docs,
                                   const PipelineConfig& config,
                                   const FeatureResources& resources);

}  // namespace nep
