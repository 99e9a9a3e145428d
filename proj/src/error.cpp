#include "ragmark/error.hpp"

namespace ragmark {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::empty_document: return "empty_document";
    case ErrorCode::zero_vector: return "zero_vector";
    case ErrorCode::dim_mismatch: return "dim_mismatch";
    case ErrorCode::embedder_changed: return "embedder_changed";
    case ErrorCode::empty_index: return "empty_index";
    case ErrorCode::checksum: return "checksum";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::malformed_file: return "malformed_file";
    case ErrorCode::no_eligible_pairs: return "no_eligible_pairs";
    case ErrorCode::all_paragraphs_skipped: return "all_paragraphs_skipped";
    case ErrorCode::degenerate_cloud: return "degenerate_cloud";
    case ErrorCode::no_clusters: return "no_clusters";
    case ErrorCode::no_surviving_clusters: return "no_surviving_clusters";
    case ErrorCode::empty_reference: return "empty_reference";
    case ErrorCode::transport: return "transport";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::http_status: return "http_status";
    case ErrorCode::malformed_response: return "malformed_response";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::aborted: return "aborted";
    case ErrorCode::generation_failed: return "generation_failed";
    }
    return "unknown";
}

} // namespace ragmark
