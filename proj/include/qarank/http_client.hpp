#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qarank {

struct RetryPolicy {
    std::chrono::milliseconds timeout{30000};
    /// Total attempts including the first one.
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{200};
    /// Extra random fraction of each backoff, in [0, jitter).
    double jitter = 0.25;
    std::uint64_t seed = 0;
};

/// Waiting time before attempt `attempt + 1` (attempt is 1-based):
/// base * 2^(attempt-1) * (1 + u * jitter) with u drawn from a generator
/// seeded by (policy.seed, request_key).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, std::uint64_t request_key);

/// POSTs JSON to one URL and parses a JSON reply. Connection failures,
/// timeouts, 408, 429 and 5xx raise TransportError and are retried up to
/// policy.max_attempts; other statuses and unparsable bodies raise
/// ProtocolError immediately. Safe to share across threads: each call opens
/// its own connection.
class JsonHttpClient {
  public:
    JsonHttpClient(const std::string& url, RetryPolicy policy,
                   std::vector<std::pair<std::string, std::string>> headers = {});

    nlohmann::json post(const nlohmann::json& body, std::uint64_t request_key = 0) const;

    const std::string& url() const noexcept { return url_; }

  private:
    nlohmann::json post_once(const std::string& payload) const;

    std::string url_;
    std::string origin_;
    std::string path_;
    RetryPolicy policy_;
    std::vector<std::pair<std::string, std::string>> headers_;
};

/// Bearer-token header from the named environment variable, if it is set.
std::vector<std::pair<std::string, std::string>> auth_headers_from_env(const std::string& env_var);

}  // namespace qarank
