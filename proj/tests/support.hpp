#pragma once

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qarank/cli.hpp"
#include "qarank/io.hpp"

namespace qarank::test {

inline std::filesystem::path fixture_dir() { return QARANK_FIXTURE_DIR; }

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("qarank-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, std::string_view contents) const {
        const auto p = path_ / name;
        std::filesystem::create_directories(p.parent_path());
        io::write_file_atomic(p, contents);
        return p;
    }

  private:
    std::filesystem::path path_;
};

/// In-process HTTP server on an ephemeral localhost port.
class MockServer {
  public:
    explicit MockServer(const std::function<void(httplib::Server&)>& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    std::string url(const std::string& path = "/") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

/// Chat-completions handler that answers with the title of the context block
/// printed right before the question, i.e. the best one under best_last.
inline void mock_llm(httplib::Server& server, const std::string& path = "/v1/chat/completions") {
    server.Post(path, [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
        auto head = prompt.substr(0, prompt.rfind("Question:"));
        while (!head.empty() && head.back() == '\n') head.pop_back();
        const auto block_start = head.rfind("\n\n");
        const auto block = block_start == std::string::npos ? head : head.substr(block_start + 2);
        const auto title = block.substr(0, block.find('\n'));
        const nlohmann::json reply{
            {"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", "Answer: " + title}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

inline CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace qarank::test
