#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ragmark {

using json = nlohmann::json;

/// One compact JSON object per line; invalid UTF-8 is replaced, never thrown on.
std::string dump_line(const json &value);

std::vector<json> read_jsonl(const std::filesystem::path &path);
void write_jsonl(const std::filesystem::path &path, const std::vector<json> &records);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, const std::string &contents);

} // namespace ragmark
