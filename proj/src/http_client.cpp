#include "qarank/http_client.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include "qarank/errors.hpp"

namespace qarank {
namespace {

bool is_retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, std::uint64_t request_key) {
    std::seed_seq seq{static_cast<std::uint32_t>(policy.seed), static_cast<std::uint32_t>(policy.seed >> 32),
                      static_cast<std::uint32_t>(request_key), static_cast<std::uint32_t>(request_key >> 32),
                      static_cast<std::uint32_t>(attempt)};
    std::mt19937_64 rng(seq);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double base = static_cast<double>(policy.backoff_base.count()) * std::ldexp(1.0, attempt - 1);
    return std::chrono::milliseconds(static_cast<long long>(base * (1.0 + u * policy.jitter)));
}

JsonHttpClient::JsonHttpClient(const std::string& url, RetryPolicy policy,
                               std::vector<std::pair<std::string, std::string>> headers)
    : url_(url), policy_(policy), headers_(std::move(headers)) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint \"" + url + "\" must start with http:// or https://");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint \"" + url + "\" must start with http:// or https://");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw ConfigError("https endpoints need a build with TLS support");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (origin_.size() <= scheme_end + 3) {
        throw ConfigError("endpoint \"" + url + "\" has no host");
    }
    if (policy_.max_attempts < 1) {
        throw ConfigError("retry policy needs at least one attempt");
    }
}

nlohmann::json JsonHttpClient::post_once(const std::string& payload) const {
    httplib::Client client(origin_);
    const auto timeout = policy_.timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    for (const auto& [name, value] : headers_) {
        headers.emplace(name, value);
    }
    auto result = client.Post(path_, headers, payload, "application/json");
    if (!result) {
        throw TransportError(url_ + ": " + httplib::to_string(result.error()));
    }
    if (is_retryable_status(result->status)) {
        throw TransportError(url_ + ": HTTP " + std::to_string(result->status));
    }
    if (result->status < 200 || result->status >= 300) {
        throw ProtocolError(url_ + ": HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200));
    }
    try {
        return nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(url_ + ": response is not JSON: " + e.what());
    }
}

nlohmann::json JsonHttpClient::post(const nlohmann::json& body, std::uint64_t request_key) const {
    const auto payload = body.dump();
    for (int attempt = 1;; ++attempt) {
        try {
            return post_once(payload);
        } catch (const TransportError& e) {
            if (attempt >= policy_.max_attempts) {
                throw TransportError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) +
                                     " attempts)");
            }
        }
        std::this_thread::sleep_for(backoff_delay(policy_, attempt, request_key));
    }
}

std::vector<std::pair<std::string, std::string>> auth_headers_from_env(const std::string& env_var) {
    if (env_var.empty()) {
        return {};
    }
    const char* key = std::getenv(env_var.c_str());
    if (key == nullptr || *key == '\0') {
        return {};
    }
    return {{"Authorization", std::string("Bearer ") + key}};
}

}  // namespace qarank
