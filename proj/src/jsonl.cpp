#include "ragmark/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "ragmark/error.hpp"

namespace ragmark {

std::string dump_line(const json &value) {
    return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path &path, const std::string &contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << contents;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::vector<json> read_jsonl(const std::filesystem::path &path) {
    std::istringstream in(read_file(path));
    std::vector<json> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::parse_error &e) {
            throw Error(ErrorCode::malformed_file,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

void write_jsonl(const std::filesystem::path &path, const std::vector<json> &records) {
    std::string out;
    for (const auto &r : records) {
        out += dump_line(r);
        out += '\n';
    }
    write_file(path, out);
}

} // namespace ragmark
