#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nep/corpus.hpp"
#include "nep/features.hpp"
#include "nep/labels.hpp"

namespace nep {

using LabelArray = std::array<double, kLabelCount>;
using LabelCounts = std::array<std::uint32_t, kLabelCount>;

struct TrainingExample {
  FeatureVector x;
  EventLabel y = EventLabel::NoneOfAbove;
};
using TrainingSet = std::vector<TrainingExample>;

// Multinomial naive Bayes with Laplace-alpha smoothing.
struct NaiveBayesModel {
  LabelArray class_log_prior{};
  // [label][feature]; per label the exponentials sum to 1.
  std::array<std::vector<double>, kLabelCount> feature_log_likelihood{};
  double alpha = 1.0;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::uint32_t present_child = 0;
  std::uint32_t absent_child = 0;
  LabelCounts counts{};  // leaf only: training sample count per label
  bool is_leaf() const { return feature < 0; }
};

// Binary tree over presence tests "count(feature) > 0"; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
};

struct BaggedTreeModel {
  std::vector<DecisionTree> trees;
  std::uint32_t bag_count = 10;
  std::uint32_t max_depth = 20;
  std::uint32_t min_leaf = 2;
  std::uint64_t rng_seed = 1;
};

// One-vs-rest linear scorer trained on L2-regularized hinge loss.
struct LinearMarginModel {
  std::array<std::vector<double>, kLabelCount> weights{};  // [label][feature]
  LabelArray bias{};
  double reg_lambda = 1e-3;
};

struct EnsembleModel {
  NaiveBayesModel nb;
  BaggedTreeModel trees;
  LinearMarginModel linear;
  Vocabulary vocab;
  // All 11 labels, descending training frequency, ties in canonical order.
  std::vector<EventLabel> label_priority;
};

struct Prediction {
  LabelArray scores{};  // normalized to sum 1
  EventLabel label = EventLabel::NoneOfAbove;
};

struct SentenceClassification {
  EventLabel label = EventLabel::NoneOfAbove;
  std::array<std::uint32_t, kLabelCount> votes{};  // sums to 3
  LabelArray scores{};  // mean of the three classifiers' scores, sums to 1
};

struct EnsembleOptions {
  double alpha = 1.0;
  std::uint32_t bag_count = 10;
  std::uint32_t max_depth = 20;
  std::uint32_t min_leaf = 2;
  double reg_lambda = 1e-3;
  std::uint32_t epochs = 20;
  std::uint64_t seed = 1;
};

NaiveBayesModel train_naive_bayes(const TrainingSet& data,
                                  std::size_t vocab_size, double alpha);

// One tree on the full data, no bootstrap: the greedy gain-ratio growth
// that bagging repeats per bootstrap sample.
DecisionTree grow_tree(const TrainingSet& data, std::uint32_t max_depth,
                       std::uint32_t min_leaf);

// Deterministic bootstrap bagging; each tree is grown greedily on binary
// presence tests scored by information gain ratio.
BaggedTreeModel train_bagged_trees(const TrainingSet& data,
                                   std::uint32_t bag_count,
                                   std::uint32_t max_depth,
                                   std::uint32_t min_leaf, std::uint64_t seed);

// Stochastic subgradient descent on the one-vs-rest hinge objective with
// step 1/(lambda*t) and deterministic per-epoch shuffles.
LinearMarginModel train_linear(const TrainingSet& data, std::size_t vocab_size,
                               double reg_lambda, std::uint32_t epochs,
                               std::uint64_t seed);

// Highest score wins; exact score ties go to the earlier label in
// `priority`.
EventLabel argmax_with_priority(const LabelArray& scores,
                                std::span<const EventLabel> priority);

Prediction predict_single(const NaiveBayesModel& model, const FeatureVector& x,
                          std::span<const EventLabel> priority);
Prediction predict_single(const BaggedTreeModel& model, const FeatureVector& x,
                          std::span<const EventLabel> priority);
Prediction predict_single(const LinearMarginModel& model,
                          const FeatureVector& x,
                          std::span<const EventLabel> priority);

std::vector<EventLabel> label_priority_from_counts(const TrainingSet& data);

EnsembleModel train_ensemble(const TrainingSet& data, Vocabulary vocab,
                             const EnsembleOptions& options);

// Majority vote over the three classifiers; a three-way tie falls back to
// the highest mean score among the tied labels, then label priority.
SentenceClassification ensemble_predict(const EnsembleModel& model,
                                        const FeatureVector& x);

std::vector<SentenceClassification> classify_document(const EnsembleModel& model,
                                                      const Document& doc);

// Versioned JSON artifact; loading an unknown version or undecodable file
// throws VersionError.
std::string ensemble_to_json(const EnsembleModel& model);
EnsembleModel ensemble_from_json(std::string_view text);
void save_ensemble(const EnsembleModel& model,
                   const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace nep
