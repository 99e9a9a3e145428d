#pragma once

#include <string>

#include "ragmark/jsonl.hpp"

namespace ragmark::http {

/// Timeouts below this are rejected at configuration time.
inline constexpr int kMinTimeoutMs = 50;

struct Options {
    int timeout_ms = 30000;
    int retries = 2;
    int retry_backoff_ms = 50;
};

/// Throws Error{config} for a timeout under the floor or negative retries.
void validate(const Options &opts);

/// POST a JSON body to `endpoint` + `path` ("http://host:port[/base]").
/// Transport failures, timeouts, 429 and 5xx responses are retried up to
/// `opts.retries` times; other non-200 statuses and unparsable bodies fail
/// immediately.
json post_json(const std::string &endpoint, const std::string &path, const json &body, const Options &opts);

} // namespace ragmark::http
