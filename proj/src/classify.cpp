#include "nep/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nep/errors.hpp"
#include "nep/rng.hpp"

namespace nep {
namespace {

using ordered_json = nlohmann::ordered_json;

LabelArray softmax(const LabelArray& raw) {
  double peak = raw[0];
  for (double v : raw) peak = std::max(peak, v);
  LabelArray out{};
  double total = 0.0;
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    out[c] = std::exp(raw[c] - peak);
    total += out[c];
  }
  for (double& v : out) v /= total;
  return out;
}

double entropy_bits(const LabelCounts& counts, std::uint32_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (std::uint32_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, std::uint32_t max_depth,
              std::uint32_t min_leaf)
      : data_(data), max_depth_(max_depth), min_leaf_(min_leaf) {}

  DecisionTree build(std::vector<std::uint32_t> samples) {
    nodes_.clear();
    grow(std::move(samples), 0);
    return DecisionTree{std::move(nodes_)};
  }

 private:
  std::uint32_t make_leaf(const LabelCounts& counts) {
    TreeNode leaf;
    leaf.counts = counts;
    nodes_.push_back(leaf);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t grow(std::vector<std::uint32_t> samples, std::uint32_t depth) {
    LabelCounts counts{};
    for (std::uint32_t i : samples) ++counts[label_index(data_[i].y)];
    const auto total = static_cast<std::uint32_t>(samples.size());

    int distinct = 0;
    for (std::uint32_t c : counts) distinct += c > 0 ? 1 : 0;
    if (distinct <= 1 || depth >= max_depth_ || total < 2 * min_leaf_) {
      return make_leaf(counts);
    }

    // Class counts among samples where each feature is present; std::map
    // keeps candidate order by feature index so equal ratios pick the
    // lowest index.
    std::map<std::uint32_t, LabelCounts> present;
    for (std::uint32_t i : samples) {
      const auto cls = label_index(data_[i].y);
      for (const auto& [feature, count] : data_[i].x.counts) {
        (void)count;
        ++present[feature][cls];
      }
    }

    const double parent_entropy = entropy_bits(counts, total);
    double best_ratio = 0.0;
    std::int64_t best_feature = -1;
    for (const auto& [feature, with_counts] : present) {
      std::uint32_t with_total = 0;
      for (std::uint32_t c : with_counts) with_total += c;
      const std::uint32_t without_total = total - with_total;
      if (with_total < min_leaf_ || without_total < min_leaf_) continue;
      LabelCounts without_counts{};
      for (std::size_t c = 0; c < kLabelCount; ++c) {
        without_counts[c] = counts[c] - with_counts[c];
      }
      const double p_with = static_cast<double>(with_total) / total;
      const double p_without = static_cast<double>(without_total) / total;
      const double gain = parent_entropy -
                          p_with * entropy_bits(with_counts, with_total) -
                          p_without * entropy_bits(without_counts, without_total);
      if (gain <= 1e-12) continue;
      const double split_info =
          -(p_with * std::log2(p_with) + p_without * std::log2(p_without));
      const double ratio = gain / split_info;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best_feature = feature;
      }
    }
    if (best_feature < 0) return make_leaf(counts);

    std::vector<std::uint32_t> with_samples;
    std::vector<std::uint32_t> without_samples;
    for (std::uint32_t i : samples) {
      const bool has = data_[i].x.counts.count(
                           static_cast<std::uint32_t>(best_feature)) > 0;
      (has ? with_samples : without_samples).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    const auto node = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    const std::uint32_t present_child = grow(std::move(with_samples), depth + 1);
    const std::uint32_t absent_child =
        grow(std::move(without_samples), depth + 1);
    nodes_[node].feature = static_cast<std::int32_t>(best_feature);
    nodes_[node].present_child = present_child;
    nodes_[node].absent_child = absent_child;
    return node;
  }

  const TrainingSet& data_;
  std::uint32_t max_depth_;
  std::uint32_t min_leaf_;
  std::vector<TreeNode> nodes_;
};

const TreeNode& route(const DecisionTree& tree, const FeatureVector& x) {
  std::size_t at = 0;
  while (!tree.nodes[at].is_leaf()) {
    const auto& node = tree.nodes[at];
    const bool has =
        x.counts.count(static_cast<std::uint32_t>(node.feature)) > 0;
    at = has ? node.present_child : node.absent_child;
  }
  return tree.nodes[at];
}

ordered_json tree_to_json(const DecisionTree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const auto& node : tree.nodes) {
    ordered_json j;
    if (node.is_leaf()) {
      j["counts"] = node.counts;
    } else {
      j["feature"] = node.feature;
      j["present"] = node.present_child;
      j["absent"] = node.absent_child;
    }
    nodes.push_back(std::move(j));
  }
  return ordered_json{{"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const ordered_json& j) {
  DecisionTree tree;
  for (const auto& node_json : j.at("nodes")) {
    TreeNode node;
    if (node_json.contains("feature")) {
      node.feature = node_json.at("feature").get<std::int32_t>();
      node.present_child = node_json.at("present").get<std::uint32_t>();
      node.absent_child = node_json.at("absent").get<std::uint32_t>();
    } else {
      const auto counts = node_json.at("counts").get<std::vector<std::uint32_t>>();
      if (counts.size() != kLabelCount) {
        throw VersionError("model file: leaf count vector has wrong arity");
      }
      std::copy(counts.begin(), counts.end(), node.counts.begin());
    }
    tree.nodes.push_back(node);
  }
  if (tree.nodes.empty()) {
    throw VersionError("model file: empty tree");
  }
  return tree;
}

std::vector<EventLabel> labels_from_json(const ordered_json& j) {
  std::vector<EventLabel> out;
  for (const auto& name : j) {
    out.push_back(require_label(name.get<std::string>()));
  }
  return out;
}

}  // namespace

NaiveBayesModel train_naive_bayes(const TrainingSet& data,
                                  std::size_t vocab_size, double alpha) {
  if (data.empty()) {
    throw ContractError("train_naive_bayes: empty training set");
  }
  if (vocab_size == 0) {
    throw ContractError("train_naive_bayes: empty vocabulary");
  }
  if (alpha <= 0.0) {
    throw ContractError("train_naive_bayes: smoothing alpha must be > 0");
  }

  LabelCounts class_counts{};
  std::array<std::vector<double>, kLabelCount> feature_counts;
  std::array<double, kLabelCount> feature_totals{};
  for (auto& row : feature_counts) row.assign(vocab_size, 0.0);

  for (const auto& example : data) {
    const auto cls = label_index(example.y);
    ++class_counts[cls];
    for (const auto& [feature, count] : example.x.counts) {
      if (feature >= vocab_size) {
        throw ContractError("train_naive_bayes: feature index out of range");
      }
      feature_counts[cls][feature] += count;
      feature_totals[cls] += count;
    }
  }

  NaiveBayesModel model;
  model.alpha = alpha;
  const double prior_denom =
      static_cast<double>(data.size()) + alpha * kLabelCount;
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    model.class_log_prior[c] = std::log((class_counts[c] + alpha) / prior_denom);
    model.feature_log_likelihood[c].resize(vocab_size);
    const double denom =
        feature_totals[c] + alpha * static_cast<double>(vocab_size);
    for (std::size_t f = 0; f < vocab_size; ++f) {
      model.feature_log_likelihood[c][f] =
          std::log((feature_counts[c][f] + alpha) / denom);
    }
  }
  return model;
}

DecisionTree grow_tree(const TrainingSet& data, std::uint32_t max_depth,
                       std::uint32_t min_leaf) {
  if (data.empty()) {
    throw ContractError("grow_tree: empty training set");
  }
  if (min_leaf == 0) {
    throw ContractError("grow_tree: min_leaf must be >= 1");
  }
  TreeBuilder builder(data, max_depth, min_leaf);
  std::vector<std::uint32_t> samples(data.size());
  std::iota(samples.begin(), samples.end(), 0u);
  return builder.build(std::move(samples));
}

BaggedTreeModel train_bagged_trees(const TrainingSet& data,
                                   std::uint32_t bag_count,
                                   std::uint32_t max_depth,
                                   std::uint32_t min_leaf, std::uint64_t seed) {
  if (data.empty()) {
    throw ContractError("train_bagged_trees: empty training set");
  }
  if (bag_count == 0) {
    throw ContractError("train_bagged_trees: bag_count must be >= 1");
  }
  if (min_leaf == 0) {
    throw ContractError("train_bagged_trees: min_leaf must be >= 1");
  }

  BaggedTreeModel model;
  model.bag_count = bag_count;
  model.max_depth = max_depth;
  model.min_leaf = min_leaf;
  model.rng_seed = seed;

  TreeBuilder builder(data, max_depth, min_leaf);
  const auto n = data.size();
  for (std::uint32_t b = 0; b < bag_count; ++b) {
    Rng rng(mix_seed(seed, b));
    std::vector<std::uint32_t> bootstrap(n);
    for (auto& idx : bootstrap) {
      idx = static_cast<std::uint32_t>(rng.below(n));
    }
    model.trees.push_back(builder.build(std::move(bootstrap)));
  }
  return model;
}

LinearMarginModel train_linear(const TrainingSet& data, std::size_t vocab_size,
                               double reg_lambda, std::uint32_t epochs,
                               std::uint64_t seed) {
  if (data.empty()) {
    throw ContractError("train_linear: empty training set");
  }
  if (vocab_size == 0) {
    throw ContractError("train_linear: empty vocabulary");
  }
  if (reg_lambda <= 0.0) {
    throw ContractError("train_linear: reg_lambda must be > 0");
  }

  // Weights are kept as w = scale * v so the per-step shrink by
  // (1 - eta*lambda) = (1 - 1/t) touches one scalar, not every coordinate.
  // The t = 1 step zeroes the weights, after which scale = 1/t exactly, so
  // no underflow guard is needed for any realistic step count.
  std::array<std::vector<double>, kLabelCount> v;
  for (auto& row : v) row.assign(vocab_size, 0.0);
  LabelArray bias{};
  double scale = 1.0;

  std::vector<std::uint32_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::uint64_t t = 0;
  for (std::uint32_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(mix_seed(seed, 0x10000u + epoch));
    rng.shuffle(order);
    for (std::uint32_t i : order) {
      ++t;
      const double eta = 1.0 / (reg_lambda * static_cast<double>(t));
      const auto& example = data[i];

      LabelArray margins{};
      for (std::size_t c = 0; c < kLabelCount; ++c) {
        double dot = bias[c];
        for (const auto& [feature, count] : example.x.counts) {
          if (feature >= vocab_size) {
            throw ContractError("train_linear: feature index out of range");
          }
          dot += scale * v[c][feature] * count;
        }
        margins[c] = dot;
      }

      const double shrink = 1.0 - eta * reg_lambda;
      if (shrink == 0.0) {
        scale = 1.0;
        for (auto& row : v) std::fill(row.begin(), row.end(), 0.0);
      } else {
        scale *= shrink;
      }

      const auto truth = label_index(example.y);
      for (std::size_t c = 0; c < kLabelCount; ++c) {
        const double y = c == truth ? 1.0 : -1.0;
        if (y * margins[c] >= 1.0) continue;
        const double step = eta * y;
        for (const auto& [feature, count] : example.x.counts) {
          v[c][feature] += step * count / scale;
        }
        bias[c] += step;
      }
    }
  }

  LinearMarginModel model;
  model.reg_lambda = reg_lambda;
  model.bias = bias;
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    model.weights[c].resize(vocab_size);
    for (std::size_t f = 0; f < vocab_size; ++f) {
      model.weights[c][f] = scale * v[c][f];
    }
  }
  return model;
}

EventLabel argmax_with_priority(const LabelArray& scores,
                                std::span<const EventLabel> priority) {
  EventLabel best = priority.front();
  double best_score = scores[label_index(best)];
  for (EventLabel label : priority.subspan(1)) {
    const double score = scores[label_index(label)];
    if (score > best_score) {
      best_score = score;
      best = label;
    }
  }
  return best;
}

Prediction predict_single(const NaiveBayesModel& model, const FeatureVector& x,
                          std::span<const EventLabel> priority) {
  const auto vocab_size = model.feature_log_likelihood[0].size();
  LabelArray joint = model.class_log_prior;
  for (const auto& [feature, count] : x.counts) {
    if (feature >= vocab_size) {
      throw ContractError("naive Bayes: feature index out of range");
    }
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      joint[c] += model.feature_log_likelihood[c][feature] * count;
    }
  }
  Prediction out;
  out.scores = softmax(joint);
  out.label = argmax_with_priority(out.scores, priority);
  return out;
}

Prediction predict_single(const BaggedTreeModel& model, const FeatureVector& x,
                          std::span<const EventLabel> priority) {
  if (model.trees.empty()) {
    throw ContractError("bagged trees: model has no trees");
  }
  LabelArray sum{};
  for (const auto& tree : model.trees) {
    const TreeNode& leaf = route(tree, x);
    std::uint32_t total = 0;
    for (std::uint32_t c : leaf.counts) total += c;
    if (total == 0) continue;
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      sum[c] += static_cast<double>(leaf.counts[c]) / total;
    }
  }
  Prediction out;
  double mass = 0.0;
  for (double s : sum) mass += s;
  if (mass <= 0.0) {
    for (double& s : out.scores) s = 1.0 / kLabelCount;
  } else {
    for (std::size_t c = 0; c < kLabelCount; ++c) out.scores[c] = sum[c] / mass;
  }
  out.label = argmax_with_priority(out.scores, priority);
  return out;
}

Prediction predict_single(const LinearMarginModel& model,
                          const FeatureVector& x,
                          std::span<const EventLabel> priority) {
  const auto vocab_size = model.weights[0].size();
  LabelArray margins = model.bias;
  for (const auto& [feature, count] : x.counts) {
    if (feature >= vocab_size) {
      throw ContractError("linear model: feature index out of range");
    }
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      margins[c] += model.weights[c][feature] * count;
    }
  }
  Prediction out;
  out.scores = softmax(margins);
  out.label = argmax_with_priority(out.scores, priority);
  return out;
}

std::vector<EventLabel> label_priority_from_counts(const TrainingSet& data) {
  LabelCounts counts{};
  for (const auto& example : data) ++counts[label_index(example.y)];
  std::vector<EventLabel> order(all_labels().begin(), all_labels().end());
  std::stable_sort(order.begin(), order.end(),
                   [&counts](EventLabel a, EventLabel b) {
                     return counts[label_index(a)] > counts[label_index(b)];
                   });
  return order;
}

EnsembleModel train_ensemble(const TrainingSet& data, Vocabulary vocab,
                             const EnsembleOptions& options) {
  if (data.empty()) {
    throw ContractError("train_ensemble: empty training set");
  }
  EnsembleModel model;
  model.nb = train_naive_bayes(data, vocab.size(), options.alpha);
  model.trees = train_bagged_trees(data, options.bag_count, options.max_depth,
                                   options.min_leaf, options.seed);
  model.linear = train_linear(data, vocab.size(), options.reg_lambda,
                              options.epochs, options.seed);
  model.vocab = std::move(vocab);
  model.label_priority = label_priority_from_counts(data);
  return model;
}

SentenceClassification ensemble_predict(const EnsembleModel& model,
                                        const FeatureVector& x) {
  const std::span<const EventLabel> priority{model.label_priority};
  const Prediction nb = predict_single(model.nb, x, priority);
  const Prediction trees = predict_single(model.trees, x, priority);
  const Prediction linear = predict_single(model.linear, x, priority);

  SentenceClassification out;
  ++out.votes[label_index(nb.label)];
  ++out.votes[label_index(trees.label)];
  ++out.votes[label_index(linear.label)];
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    out.scores[c] = (nb.scores[c] + trees.scores[c] + linear.scores[c]) / 3.0;
  }

  std::uint32_t top_votes = 0;
  for (std::uint32_t votes : out.votes) top_votes = std::max(top_votes, votes);
  if (top_votes >= 2) {
    for (EventLabel label : priority) {
      if (out.votes[label_index(label)] == top_votes) {
        out.label = label;
        break;
      }
    }
  } else {
    // Three distinct votes: highest mean score among the voted labels,
    // residual ties broken by priority order.
    EventLabel best = nb.label;
    double best_score = -1.0;
    for (EventLabel label : priority) {
      if (out.votes[label_index(label)] == 0) continue;
      const double score = out.scores[label_index(label)];
      if (score > best_score) {
        best_score = score;
        best = label;
      }
    }
    out.label = best;
  }
  return out;
}

std::vector<SentenceClassification> classify_document(
    const EnsembleModel& model, const Document& doc) {
  std::vector<SentenceClassification> out;
  out.reserve(doc.sentences.size());
  for (const auto& sentence : doc.sentences) {
    out.push_back(ensemble_predict(model, vectorize(sentence, model.vocab)));
  }
  return out;
}

std::string ensemble_to_json(const EnsembleModel& model) {
  ordered_json j;
  j["version"] = 1;

  ordered_json vocab;
  vocab["features"] = model.vocab.features;
  vocab["doc_freq"] = model.vocab.doc_freq;
  vocab["document_count"] = model.vocab.document_count;
  j["vocab"] = std::move(vocab);

  ordered_json nb;
  nb["alpha"] = model.nb.alpha;
  nb["class_log_prior"] = model.nb.class_log_prior;
  nb["feature_log_likelihood"] = model.nb.feature_log_likelihood;
  j["nb"] = std::move(nb);

  ordered_json trees;
  trees["bag_count"] = model.trees.bag_count;
  trees["max_depth"] = model.trees.max_depth;
  trees["min_leaf"] = model.trees.min_leaf;
  trees["rng_seed"] = model.trees.rng_seed;
  ordered_json tree_list = ordered_json::array();
  for (const auto& tree : model.trees.trees) {
    tree_list.push_back(tree_to_json(tree));
  }
  trees["trees"] = std::move(tree_list);
  j["trees"] = std::move(trees);

  ordered_json linear;
  linear["reg_lambda"] = model.linear.reg_lambda;
  linear["bias"] = model.linear.bias;
  linear["weights"] = model.linear.weights;
  j["linear"] = std::move(linear);

  ordered_json priority = ordered_json::array();
  for (EventLabel label : model.label_priority) {
    priority.push_back(std::string(label_name(label)));
  }
  j["label_priority"] = std::move(priority);

  return j.dump(2) + "\n";
}

EnsembleModel ensemble_from_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw VersionError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const auto version = j.at("version").get<std::int64_t>();
    if (version != 1) {
      throw VersionError("model file: unsupported version " +
                         std::to_string(version));
    }

    EnsembleModel model;
    const auto& vocab = j.at("vocab");
    model.vocab.features = vocab.at("features").get<std::vector<std::string>>();
    model.vocab.doc_freq =
        vocab.at("doc_freq").get<std::vector<std::uint32_t>>();
    model.vocab.document_count =
        vocab.at("document_count").get<std::uint32_t>();
    if (model.vocab.doc_freq.size() != model.vocab.features.size()) {
      throw VersionError("model file: vocab arity mismatch");
    }
    for (std::uint32_t i = 0; i < model.vocab.features.size(); ++i) {
      model.vocab.index.emplace(model.vocab.features[i], i);
    }

    const auto vocab_size = model.vocab.features.size();
    const auto& nb = j.at("nb");
    model.nb.alpha = nb.at("alpha").get<double>();
    const auto priors = nb.at("class_log_prior").get<std::vector<double>>();
    const auto loglik =
        nb.at("feature_log_likelihood").get<std::vector<std::vector<double>>>();
    if (priors.size() != kLabelCount || loglik.size() != kLabelCount) {
      throw VersionError("model file: naive Bayes arity mismatch");
    }
    std::copy(priors.begin(), priors.end(), model.nb.class_log_prior.begin());
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      if (loglik[c].size() != vocab_size) {
        throw VersionError("model file: naive Bayes arity mismatch");
      }
      model.nb.feature_log_likelihood[c] = loglik[c];
    }

    const auto& trees = j.at("trees");
    model.trees.bag_count = trees.at("bag_count").get<std::uint32_t>();
    model.trees.max_depth = trees.at("max_depth").get<std::uint32_t>();
    model.trees.min_leaf = trees.at("min_leaf").get<std::uint32_t>();
    model.trees.rng_seed = trees.at("rng_seed").get<std::uint64_t>();
    for (const auto& tree_json : trees.at("trees")) {
      model.trees.trees.push_back(tree_from_json(tree_json));
    }
    if (model.trees.trees.empty()) {
      throw VersionError("model file: no trees");
    }

    const auto& linear = j.at("linear");
    model.linear.reg_lambda = linear.at("reg_lambda").get<double>();
    const auto bias = linear.at("bias").get<std::vector<double>>();
    const auto weights =
        linear.at("weights").get<std::vector<std::vector<double>>>();
    if (bias.size() != kLabelCount || weights.size() != kLabelCount) {
      throw VersionError("model file: linear arity mismatch");
    }
    std::copy(bias.begin(), bias.end(), model.linear.bias.begin());
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      if (weights[c].size() != vocab_size) {
        throw VersionError("model file: linear arity mismatch");
      }
      model.linear.weights[c] = weights[c];
    }

    model.label_priority = labels_from_json(j.at("label_priority"));
    std::array<bool, kLabelCount> seen{};
    for (EventLabel label : model.label_priority) seen[label_index(label)] = true;
    if (model.label_priority.size() != kLabelCount ||
        !std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
      throw VersionError("model file: label priority must list every label once");
    }
    return model;
  } catch (const ordered_json::exception& e) {
    throw VersionError(std::string("model file: missing or mistyped field: ") +
                       e.what());
  } catch (const ContractError& e) {
    throw VersionError(std::string("model file: ") + e.what());
  }
}

void save_ensemble(const EnsembleModel& model,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open model file for writing: " + path.string());
  }
  out << ensemble_to_json(model);
  if (!out) {
    throw IoError("failed to write model file: " + path.string());
  }
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open model file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ensemble_from_json(buffer.str());
}

}  // namespace nep
