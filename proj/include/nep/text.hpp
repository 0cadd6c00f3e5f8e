#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace nep {

// ASCII lowercase; multi-byte sequences pass through untouched.
std::string to_lower(std::string_view text);

std::string_view trim(std::string_view text);

// Lowercased alphanumeric token runs; everything else is a separator.
std::vector<std::string> tokenize(std::string_view text);

// One lowercase entry per line, '#' starts a comment, blank lines ignored.
std::set<std::string> load_word_list(const std::filesystem::path& path);

std::set<std::string> parse_word_list(std::string_view content);

}  // namespace nep
