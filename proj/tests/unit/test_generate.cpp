#include "doctest.h"

#include <atomic>
#include <future>

#include "fixtures.hpp"
#include "ragmark/error.hpp"
#include "ragmark/generate.hpp"

using namespace ragmark;

namespace {

GenerationRequest req(std::string prompt) {
    GenerationRequest r;
    r.prompt = std::move(prompt);
    return r;
}

// /generate: echoes the prompt after `fail_first` 503 responses.
struct GenServer {
    fixtures::MockServer srv;
    std::atomic<int> calls{0};
    int fail_first = 0;
    int status = 503;
    bool malformed = false;
    json last_body;
    std::mutex mutex;

    GenServer() {
        srv.server().Post("/generate", [this](const httplib::Request &r, httplib::Response &res) {
            const int call = calls++;
            if (call < fail_first) {
                res.status = status;
                return;
            }
            const auto body = json::parse(r.body);
            {
                std::lock_guard lock(mutex);
                last_body = body;
            }
            if (malformed) {
                res.set_content("{\"txt\":1}", "application/json");
                return;
            }
            res.set_content(json{{"text", body.at("prompt")}}.dump(), "application/json");
        });
        srv.start();
    }

    RemoteGenConfig config(int retries) const {
        RemoteGenConfig c;
        c.endpoint = srv.endpoint();
        c.http.retries = retries;
        c.http.retry_backoff_ms = 1;
        c.http.timeout_ms = 2000;
        return c;
    }
};

} // namespace

TEST_CASE("mock extractive: first sentence of the context block") {
    CHECK(generate_mock_extractive(req("Context:\nS1. S2.\n\nQuestion: q\nAnswer:")) == "S1.");
    CHECK(generate_mock_extractive(req("Context:\nThe sky is blue. Grass is green.\n\nQuestion: q")) ==
          "The sky is blue.");
    CHECK(generate_mock_extractive(req("Question: q\nAnswer:")) == "I do not know.");
    CHECK(generate_mock_extractive(req("Context:\n\n\nQuestion: q")) == "I do not know.");
}

TEST_CASE("mock extractive: stop sequences cut the answer") {
    auto r = req("Context:\nAlpha beta; gamma.\n\nQuestion: q");
    r.stop_sequences = {";"};
    CHECK(generate_mock_extractive(r) == "Alpha beta");
}

TEST_CASE("mock extractive: pure and concurrency-safe") {
    const MockExtractiveGenerator g;
    const auto r = req("Context:\nOne sentence here. Another.\n\nQuestion: q\nAnswer:");
    const auto expected = g.generate(r);
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 64; ++i) futures.push_back(std::async(std::launch::async, [&] { return g.generate(r); }));
    for (auto &f : futures) CHECK(f.get() == expected);
}

TEST_CASE("request validation") {
    auto r = req("p");
    r.max_new_tokens = 0;
    CHECK_THROWS_WITH_AS(MockExtractiveGenerator().generate(r), doctest::Contains("invalid_argument"), Error);
    r.max_new_tokens = 1;
    r.temperature = -0.5;
    CHECK_THROWS_AS(EchoGenerator().generate(r), Error);
    CHECK(EchoGenerator().generate(req("verbatim\nprompt")) == "verbatim\nprompt");
}

TEST_CASE("remote: echo endpoint returns the prompt verbatim and sends the wire fields") {
    GenServer s;
    auto r = req("Context:\nx\n\nQuestion: y\nAnswer:");
    r.stop_sequences = {"\n"};
    r.max_new_tokens = 17;
    CHECK(generate_remote(r, s.config(0)) == r.prompt);
    CHECK(s.last_body.at("max_new_tokens") == 17);
    CHECK(s.last_body.at("temperature") == 0.0);
    CHECK(s.last_body.at("stop") == json::array({"\n"}));
}

TEST_CASE("remote: 503 then 200 under retries=1 succeeds on the second attempt") {
    GenServer s;
    s.fail_first = 1;
    RemoteGenerationClient c(s.config(1));
    CHECK(c.generate(req("hello")) == "hello");
    CHECK(s.calls == 2);
    const auto u = c.usage();
    REQUIRE(u.has_value());
    CHECK(u->calls == 1);
    CHECK(u->failures == 0);
    CHECK(u->prompt_tokens == 1);
    CHECK(u->completion_tokens == 1);
}

TEST_CASE("remote: failures surface as typed errors") {
    SUBCASE("retries exhausted") {
        GenServer s;
        s.fail_first = 5;
        RemoteGenerationClient c(s.config(1));
        CHECK_THROWS_WITH_AS(c.generate(req("x")), doctest::Contains("http_status"), Error);
        CHECK(s.calls == 2);
        CHECK(c.usage()->failures == 1);
    }
    SUBCASE("4xx is not retried") {
        GenServer s;
        s.fail_first = 5;
        s.status = 400;
        CHECK_THROWS_AS(generate_remote(req("x"), s.config(3)), Error);
        CHECK(s.calls == 1);
    }
    SUBCASE("malformed body") {
        GenServer s;
        s.malformed = true;
        CHECK_THROWS_WITH_AS(generate_remote(req("x"), s.config(0)), doctest::Contains("malformed_response"), Error);
    }
}

TEST_CASE("remote: timeout below the floor is a config error") {
    RemoteGenConfig c;
    c.endpoint = "http://127.0.0.1:1";
    c.http.timeout_ms = http::kMinTimeoutMs - 1;
    CHECK_THROWS_WITH_AS(RemoteGenerationClient{c}, doctest::Contains("config"), Error);
    c.http.timeout_ms = 1000;
    c.http.retries = -1;
    CHECK_THROWS_AS(RemoteGenerationClient{c}, Error);
    c.http.retries = 0;
    c.endpoint.clear();
    CHECK_THROWS_AS(RemoteGenerationClient{c}, Error);
}

TEST_CASE("remote: concurrent identical requests give identical text") {
    GenServer s;
    RemoteGenerationClient c(s.config(0));
    const auto r = req("same prompt");
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 16; ++i) futures.push_back(std::async(std::launch::async, [&] { return c.generate(r); }));
    for (auto &f : futures) CHECK(f.get() == "same prompt");
    CHECK(c.usage()->calls == 16);
}
