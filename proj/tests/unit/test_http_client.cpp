#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>

#include "qarank/errors.hpp"
#include "qarank/http_client.hpp"
#include "support.hpp"

using namespace qarank;
using namespace std::chrono_literals;
using qarank::test::MockServer;

namespace {

RetryPolicy fast_policy(int attempts = 3) {
    RetryPolicy p;
    p.timeout = 200ms;
    p.max_attempts = attempts;
    p.backoff_base = 1ms;
    return p;
}

}  // namespace

TEST(BackoffDelay, DeterministicAndBounded) {
    RetryPolicy p;
    p.backoff_base = 100ms;
    p.jitter = 0.5;
    p.seed = 42;
    for (int attempt = 1; attempt <= 4; ++attempt) {
        const auto d = backoff_delay(p, attempt, 7);
        EXPECT_EQ(d, backoff_delay(p, attempt, 7));
        const auto base = 100 * (1 << (attempt - 1));
        EXPECT_GE(d.count(), base);
        EXPECT_LT(d.count(), base * 1.5);
    }
    p.jitter = 0;
    EXPECT_EQ(backoff_delay(p, 3, 1), 400ms);
}

TEST(JsonHttpClient, RejectsBadUrls) {
    EXPECT_THROW(JsonHttpClient("localhost:80/x", {}), ConfigError);
    EXPECT_THROW(JsonHttpClient("ftp://host/x", {}), ConfigError);
    EXPECT_THROW(JsonHttpClient("http:///x", {}), ConfigError);
    RetryPolicy none;
    none.max_attempts = 0;
    EXPECT_THROW(JsonHttpClient("http://host/x", none), ConfigError);
}

TEST(JsonHttpClient, PostsJsonWithHeaders) {
    MockServer server([](httplib::Server& s) {
        s.Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            body["auth"] = req.get_header_value("Authorization");
            body["content_type"] = req.get_header_value("Content-Type");
            res.set_content(body.dump(), "application/json");
        });
    });
    const JsonHttpClient client(server.url("/echo"), fast_policy(), {{"Authorization", "Bearer k"}});
    const auto reply = client.post({{"x", 1}});
    EXPECT_EQ(reply.at("x"), 1);
    EXPECT_EQ(reply.at("auth"), "Bearer k");
    EXPECT_EQ(reply.at("content_type"), "application/json");
}

TEST(JsonHttpClient, RetriesTimeoutsThenSucceeds) {
    std::atomic<int> calls{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
            if (++calls <= 2) {
                std::this_thread::sleep_for(600ms);
            }
            res.set_content(R"({"ok": true})", "application/json");
        });
    });
    const JsonHttpClient client(server.url("/slow"), fast_policy(3));
    EXPECT_EQ(client.post({}).at("ok"), true);
    EXPECT_EQ(calls.load(), 3);
}

TEST(JsonHttpClient, GivesUpAfterMaxAttempts) {
    std::atomic<int> calls{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/busy", [&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 503;
        });
    });
    const JsonHttpClient client(server.url("/busy"), fast_policy(2));
    try {
        client.post({});
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_NE(std::string(e.what()).find("gave up after 2 attempts"), std::string::npos);
    }
    EXPECT_EQ(calls.load(), 2);
}

TEST(JsonHttpClient, ClientErrorsAndBadBodiesAreNotRetried) {
    std::atomic<int> calls{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.status = 400;
        });
        s.Post("/text", [&](const httplib::Request&, httplib::Response& res) {
            ++calls;
            res.set_content("not json", "text/plain");
        });
    });
    EXPECT_THROW(JsonHttpClient(server.url("/bad"), fast_policy()).post({}), ProtocolError);
    EXPECT_THROW(JsonHttpClient(server.url("/text"), fast_policy()).post({}), ProtocolError);
    EXPECT_EQ(calls.load(), 2);
}

TEST(JsonHttpClient, UnreachableHost) {
    // Port 9 on localhost is closed in the test environment.
    const JsonHttpClient client("http://127.0.0.1:9/x", fast_policy(2));
    EXPECT_THROW(client.post({}), TransportError);
}

TEST(AuthHeaders, FromEnvironment) {
    ::setenv("QARANK_TEST_KEY", "secret", 1);
    const auto h = auth_headers_from_env("QARANK_TEST_KEY");
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0].second, "Bearer secret");
    ::unsetenv("QARANK_TEST_KEY");
    EXPECT_TRUE(auth_headers_from_env("QARANK_TEST_KEY").empty());
    EXPECT_TRUE(auth_headers_from_env("").empty());
}
