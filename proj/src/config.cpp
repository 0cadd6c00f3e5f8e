#include "nep/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "nep/errors.hpp"
#include "nep/text.hpp"

namespace nep {
namespace {

[[noreturn]] void fail(std::string_view name, std::size_t line,
                       const std::string& message) {
  throw ContractError(std::string(name) + ":" + std::to_string(line) + ": " +
                      message);
}

template <typename T>
T parse_number(std::string_view value, std::string_view name, std::size_t line,
               std::string_view key) {
  T out{};
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    fail(name, line,
         "value for " + std::string(key) + " is not a valid number: '" +
             std::string(value) + "'");
  }
  return out;
}

std::string parse_string(std::string_view value, std::string_view name,
                         std::size_t line, std::string_view key) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return std::string(value.substr(1, value.size() - 2));
  }
  if (!value.empty() && (value.front() == '"' || value.back() == '"')) {
    fail(name, line, "unbalanced quotes in value for " + std::string(key));
  }
  return std::string(value);
}

}  // namespace

PipelineConfig parse_config(std::string_view text, std::string_view name) {
  PipelineConfig config;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    ++line_no;
    const std::size_t newline = text.find('\n', start);
    auto raw = newline == std::string_view::npos
                   ? text.substr(start)
                   : text.substr(start, newline - start);
    start = newline == std::string_view::npos ? text.size() + 1 : newline + 1;

    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(name, line_no, "expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) fail(name, line_no, "missing key before '='");

    if (key == "features.keyphrases_per_doc") {
      config.keyphrases_per_doc =
          parse_number<std::size_t>(value, name, line_no, key);
      if (config.keyphrases_per_doc < 1) {
        fail(name, line_no, "features.keyphrases_per_doc must be >= 1");
      }
    } else if (key == "features.stopwords") {
      config.stopwords_path = parse_string(value, name, line_no, key);
    } else if (key == "features.person_names") {
      config.person_names_path = parse_string(value, name, line_no, key);
    } else if (key == "features.place_names") {
      config.place_names_path = parse_string(value, name, line_no, key);
    } else if (key == "features.org_markers") {
      config.org_markers_path = parse_string(value, name, line_no, key);
    } else if (key == "features.verb_lexicon") {
      config.verb_lexicon_path = parse_string(value, name, line_no, key);
    } else if (key == "corpus.abbreviations") {
      config.abbreviations_path = parse_string(value, name, line_no, key);
    } else if (key == "classify.alpha") {
      config.alpha = parse_number<double>(value, name, line_no, key);
      if (config.alpha <= 0.0) {
        fail(name, line_no, "classify.alpha must be > 0");
      }
    } else if (key == "classify.bag_count") {
      config.bag_count = parse_number<std::uint32_t>(value, name, line_no, key);
      if (config.bag_count < 1) {
        fail(name, line_no, "classify.bag_count must be >= 1");
      }
    } else if (key == "classify.max_depth") {
      config.max_depth = parse_number<std::uint32_t>(value, name, line_no, key);
      if (config.max_depth < 1) {
        fail(name, line_no, "classify.max_depth must be >= 1");
      }
    } else if (key == "classify.min_leaf") {
      config.min_leaf = parse_number<std::uint32_t>(value, name, line_no, key);
      if (config.min_leaf < 1) {
        fail(name, line_no, "classify.min_leaf must be >= 1");
      }
    } else if (key == "classify.reg_lambda") {
      config.reg_lambda = parse_number<double>(value, name, line_no, key);
      if (config.reg_lambda <= 0.0) {
        fail(name, line_no, "classify.reg_lambda must be > 0");
      }
    } else if (key == "classify.epochs") {
      config.epochs = parse_number<std::uint32_t>(value, name, line_no, key);
      if (config.epochs < 1) {
        fail(name, line_no, "classify.epochs must be >= 1");
      }
    } else if (key == "classify.seed") {
      config.seed = parse_number<std::uint64_t>(value, name, line_no, key);
    } else if (key == "segment.context_length") {
      config.context_length =
          parse_number<std::uint32_t>(value, name, line_no, key);
      if (config.context_length > 15) {
        fail(name, line_no, "segment.context_length must be <= 15");
      }
    } else if (key == "segment.min_passage_len") {
      config.min_passage_len =
          parse_number<std::size_t>(value, name, line_no, key);
      if (config.min_passage_len < 1) {
        fail(name, line_no, "segment.min_passage_len must be >= 1");
      }
    } else if (key == "crowd.expected_per_hit") {
      config.crowd.expected_per_hit =
          parse_number<std::size_t>(value, name, line_no, key);
    } else if (key == "crowd.duration_floor_secs") {
      config.crowd.duration_floor_secs =
          parse_number<double>(value, name, line_no, key);
      if (config.crowd.duration_floor_secs < 0.0) {
        fail(name, line_no, "crowd.duration_floor_secs must be >= 0");
      }
    } else if (key == "crowd.fast_z_threshold") {
      config.crowd.fast_z_threshold =
          parse_number<double>(value, name, line_no, key);
    } else if (key == "crowd.random_agreement_floor") {
      config.crowd.random_agreement_floor =
          parse_number<double>(value, name, line_no, key);
      if (config.crowd.random_agreement_floor < 0.0 ||
          config.crowd.random_agreement_floor > 1.0) {
        fail(name, line_no, "crowd.random_agreement_floor must be in [0,1]");
      }
    } else if (key == "eval.ndcg_cutoff") {
      config.ndcg_cutoff = parse_number<std::size_t>(value, name, line_no, key);
      if (config.ndcg_cutoff < 1) {
        fail(name, line_no, "eval.ndcg_cutoff must be >= 1");
      }
    } else {
      fail(name, line_no, "unknown config key '" + std::string(key) + "'");
    }
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

}  // namespace nep
