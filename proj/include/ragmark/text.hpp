#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Byte-level text helpers shared by the corpus, metric and embedding code.
// Bytes >= 0x80 are treated as word characters so UTF-8 sequences stay intact.

namespace ragmark::text {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
};

bool is_space(char c);
bool is_punct(char c);
bool is_word_char(char c);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapse every whitespace run to one space and trim both ends.
std::string normalize_whitespace(std::string_view s);

/// Baseline tokenization: maximal runs of word characters, plus one token per
/// punctuation mark. Whitespace separates tokens and is never part of one.
std::vector<Span> token_spans(std::string_view s);
std::vector<std::string> tokens(std::string_view s);

/// Lowercased word-character runs, punctuation dropped.
std::vector<std::string> words(std::string_view s);

/// Whitespace-separated fields.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string> &parts, std::string_view sep);

} // namespace ragmark::text
