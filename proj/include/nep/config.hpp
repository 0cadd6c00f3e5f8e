#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nep/crowd.hpp"

namespace nep {

// Every tunable of the pipeline; `key = value` file with one dotted key per
// line. Unknown keys are rejected so typos fail loudly.
struct PipelineConfig {
  // features.*
  std::size_t keyphrases_per_doc = 30;
  std::string stopwords_path;
  std::string person_names_path;
  std::string place_names_path;
  std::string org_markers_path;
  std::string verb_lexicon_path;

  // corpus.*
  std::string abbreviations_path;

  // classify.*
  double alpha = 1.0;
  std::uint32_t bag_count = 10;
  std::uint32_t max_depth = 20;
  std::uint32_t min_leaf = 2;
  double reg_lambda = 1e-3;
  std::uint32_t epochs = 20;
  std::uint64_t seed = 1;

  // segment.*
  std::uint32_t context_length = 3;
  std::size_t min_passage_len = 1;

  // crowd.*
  CrowdThresholds crowd;

  // eval.*
  std::size_t ndcg_cutoff = 11;
};

PipelineConfig parse_config(std::string_view text, std::string_view name);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace nep
