#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "nep/errors.hpp"

namespace nep {

// The closed label set: ten named-event categories plus a none-of-the-above
// bucket. The enumerator order is the canonical order used for deterministic
// tie-breaking everywhere in the library.
enum class EventLabel : std::uint8_t {
  Terrorism = 0,
  SuicideBombing,
  SexAbuse,
  ManagementChanges,
  MergersAcquisitions,
  ArmedClashes,
  StreetProtest,
  Strike,
  LegalTrouble,
  Bankruptcy,
  NoneOfAbove,
};

inline constexpr std::size_t kLabelCount = 11;

constexpr std::size_t label_index(EventLabel label) {
  return static_cast<std::size_t>(label);
}

constexpr EventLabel label_from_index(std::size_t index) {
  return static_cast<EventLabel>(index);
}

namespace detail {
inline constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "terrorism",
    "suicide_bombing",
    "sex_abuse",
    "management_changes",
    "mergers_acquisitions",
    "armed_clashes",
    "street_protest",
    "strike",
    "legal_trouble",
    "bankruptcy",
    "none_of_above",
};
}  // namespace detail

// Snake-case file token for a label.
inline constexpr std::string_view label_name(EventLabel label) {
  return detail::kLabelNames[label_index(label)];
}

inline const std::array<EventLabel, kLabelCount>& all_labels() {
  static const std::array<EventLabel, kLabelCount> labels = [] {
    std::array<EventLabel, kLabelCount> out{};
    for (std::size_t i = 0; i < kLabelCount; ++i) out[i] = label_from_index(i);
    return out;
  }();
  return labels;
}

// Case-insensitive parse of a snake_case label token.
inline std::optional<EventLabel> parse_label(std::string_view text) {
  std::string lowered(text);
  for (char& c : lowered) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (lowered == detail::kLabelNames[i]) return label_from_index(i);
  }
  return std::nullopt;
}

inline EventLabel require_label(std::string_view text) {
  if (auto label = parse_label(text)) return *label;
  throw ContractError("unknown event label: '" + std::string(text) + "'");
}

}  // namespace nep
