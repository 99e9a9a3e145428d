#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragmark {

enum class ErrorCode {
    invalid_argument,
    empty_document,
    zero_vector,
    dim_mismatch,
    embedder_changed,
    empty_index,
    checksum,
    version_mismatch,
    malformed_file,
    no_eligible_pairs,
    all_paragraphs_skipped,
    degenerate_cloud,
    no_clusters,
    no_surviving_clusters,
    empty_reference,
    transport,
    timeout,
    http_status,
    malformed_response,
    config,
    io,
    aborted,
    generation_failed,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Transport-level failures that a caller may retry.
    bool retryable() const noexcept {
        return code_ == ErrorCode::transport || code_ == ErrorCode::timeout ||
               code_ == ErrorCode::http_status;
    }

  private:
    ErrorCode code_;
};

} // namespace ragmark
