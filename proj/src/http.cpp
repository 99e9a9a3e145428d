#include "ragmark/http.hpp"

#include <chrono>
#include <optional>
#include <thread>

#include "httplib.h"
#include "ragmark/error.hpp"

namespace ragmark::http {

void validate(const Options &opts) {
    if (opts.timeout_ms < kMinTimeoutMs)
        throw Error(ErrorCode::config, "timeout_ms " + std::to_string(opts.timeout_ms) + " is below the floor of " +
                                           std::to_string(kMinTimeoutMs) + " ms");
    if (opts.retries < 0) throw Error(ErrorCode::config, "retries must be >= 0");
}

namespace {

struct Target {
    std::string origin;
    std::string base_path;
};

Target parse_endpoint(const std::string &endpoint) {
    const auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw Error(ErrorCode::config, "endpoint needs a scheme: " + endpoint);
    const auto slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(slash);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, slash), base};
}

std::optional<Error> attempt(const Target &target, const std::string &path, const std::string &payload, const Options &opts,
              json &out, bool &retry) {
    httplib::Client client(target.origin);
    const auto secs = opts.timeout_ms / 1000;
    const auto usecs = (opts.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const std::string url = target.base_path + path;
    auto res = client.Post(url, payload, "application/json");
    if (!res) {
        retry = true;
        const auto err = res.error();
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
            return Error(ErrorCode::timeout, url + ": " + httplib::to_string(err));
        return Error(ErrorCode::transport, url + ": " + httplib::to_string(err));
    }
    if (res->status != 200) {
        retry = res->status == 429 || res->status >= 500;
        return Error(ErrorCode::http_status, url + ": HTTP " + std::to_string(res->status));
    }
    try {
        out = json::parse(res->body);
    } catch (const json::parse_error &e) {
        retry = false;
        return Error(ErrorCode::malformed_response, url + ": " + e.what());
    }
    if (!out.is_object()) {
        retry = false;
        return Error(ErrorCode::malformed_response, url + ": response is not a JSON object");
    }
    return std::nullopt;
}

} // namespace

json post_json(const std::string &endpoint, const std::string &path, const json &body, const Options &opts) {
    validate(opts);
    const auto target = parse_endpoint(endpoint);
    const auto payload = dump_line(body);
    for (int attempt_no = 0;; ++attempt_no) {
        json out;
        bool retry = false;
        auto err = attempt(target, path, payload, opts, out, retry);
        if (!err) return out;
        if (!retry || attempt_no >= opts.retries) throw *err;
        std::this_thread::sleep_for(std::chrono::milliseconds(opts.retry_backoff_ms * (attempt_no + 1)));
    }
}

} // namespace ragmark::http
