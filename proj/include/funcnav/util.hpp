#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace funcnav::util {

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
/// Collapses runs of whitespace into single spaces and trims.
std::string collapse_whitespace(std::string_view text);
bool starts_with_ci(std::string_view text, std::string_view prefix);

/// Number of UTF-8 code points in text.
std::size_t utf8_length(std::string_view text);
/// Prefix of at most max_chars code points.
std::string utf8_prefix(std::string_view text, std::size_t max_chars);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace funcnav::util
