#include "ragmark/text.hpp"

#include <cctype>

namespace ragmark::text {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

bool is_word_char(char c) { return !is_space(c) && !is_punct(c); }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<Span> token_spans(std::string_view s) {
    std::vector<Span> spans;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
        } else if (is_punct(s[i])) {
            spans.push_back({i, i + 1});
            ++i;
        } else {
            const std::size_t b = i;
            while (i < s.size() && is_word_char(s[i])) ++i;
            spans.push_back({b, i});
        }
    }
    return spans;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    for (const auto &sp : token_spans(s)) out.emplace_back(s.substr(sp.begin, sp.end - sp.begin));
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    for (const auto &sp : token_spans(s)) {
        if (sp.end - sp.begin == 1 && is_punct(s[sp.begin])) continue;
        out.push_back(to_lower(s.substr(sp.begin, sp.end - sp.begin)));
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        const std::size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) out.emplace_back(s.substr(b, i - b));
    }
    return out;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace ragmark::text
