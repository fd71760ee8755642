#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace coldstart::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercases, splits on whitespace and strips leading/trailing punctuation
// from every token. Empty tokens are dropped. Inner punctuation is kept, so
// "pet-friendly" stays a single token.
std::vector<std::string> tokenize(std::string_view s);

// Lowercase, every punctuation character removed, whitespace collapsed.
// Used as the deduplication key for generated queries.
std::string dedup_key(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);

bool contains_ci(std::string_view haystack, std::string_view needle);

// True if `needle` occurs in `haystack` as a contiguous token run.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

// Truncates to at most max_bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

}  // namespace coldstart::text
